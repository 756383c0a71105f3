pub mod active;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod entities;
pub mod error;
pub mod eval;
pub mod features;
pub mod genre;
pub mod models;
pub mod rng;
pub mod service;
pub mod synthetic;

pub use error::{Error, Result};
pub use genre::Genre;
