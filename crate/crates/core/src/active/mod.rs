//! Query-by-committee annotation and rater agreement.

mod committee;
mod kappa;
mod session;

pub use committee::{
    auto_label, auto_labels_from, rank_opinions, rank_order, rank_pool, select_queries, vote_entropy, AutoLabel,
    Committee, CommitteeConfig, Opinion,
};
pub use kappa::{fleiss_kappa, kappa_from_csv, read_ratings_csv, Kappa, KappaTable};
pub use session::{
    AnnotationSession, EntityView, LabelOutcome, MemberVote, QueryView, RoundSummary, SessionConfig, SessionMetrics,
};
