//! Run configuration: built-in defaults, overridden by a `key = value`
//! config file, overridden by command-line flags.
//!
//! The resolved configuration is written back out in the same format, so a
//! run directory's `config.txt` can be fed to `--config` to repeat the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::active::{CommitteeConfig, SessionConfig};
use crate::corpus::SplitRatios;
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::models::{ForestConfig, MlpConfig, ModelKind, ModelSettings, TrainConfig};
use crate::synthetic::SyntheticCorpusSpec;

pub const DATA_DIR_ENV: &str = "RECIPEFORGE_DATA_DIR";

/// Every accepted key with its default. `auto` training values take the
/// model kind's default.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "2023"),
    ("data_dir", "."),
    ("reports_dir", "reports"),
    ("run_id", ""),
    ("feature", "title"),
    ("model", "svm"),
    ("learning_rate", "auto"),
    ("batch_size", "auto"),
    ("epochs", "auto"),
    ("warmup_fraction", "auto"),
    ("weight_decay", "auto"),
    ("alpha", "1"),
    ("vocab_size", "20000"),
    ("min_df", "1"),
    ("mlp_embed_dim", "64"),
    ("mlp_hidden", "128"),
    ("forest_trees", "50"),
    ("forest_max_depth", "12"),
    ("train_ratio", "0.8"),
    ("val_ratio", "0.1"),
    ("test_ratio", "0.1"),
    ("tau", "0.99"),
    ("query_batch", "10"),
    ("committee", "nb,logreg,svm"),
    ("committee_feature", "title-ner"),
    ("per_genre", "100"),
    ("mixing", "0.7"),
    ("block_size", "0"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub data_dir: PathBuf,
    pub reports_dir: PathBuf,
    /// Empty means derive one from the command and configuration.
    pub run_id: String,
    pub feature: FeatureSpec,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub alpha: f64,
    pub vocab_size: usize,
    pub min_df: usize,
    pub mlp: MlpConfig,
    pub forest_trees: usize,
    pub forest_max_depth: usize,
    pub split: SplitRatios,
    pub tau: f64,
    pub query_batch: usize,
    pub committee: Vec<ModelKind>,
    pub committee_feature: FeatureSpec,
    pub per_genre: usize,
    pub mixing: f64,
    /// Records per experiment block; 0 runs on the whole corpus.
    pub block_size: usize,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("config line {}: expected key = value, got {line:?}", n + 1)))?;
        out.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_settings(&text)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::validation(format!("config {key}: cannot parse {v:?}")))
}

fn list<T, F: Fn(&str) -> Result<T>>(v: &str, f: F) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

impl RunConfig {
    /// Applies `layers` in order over the defaults; later layers win.
    pub fn resolve(layers: &[Vec<(String, String)>]) -> Result<RunConfig> {
        let mut map: BTreeMap<&str, String> = KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect();
        for layer in layers {
            for (k, v) in layer {
                let key = KEYS
                    .iter()
                    .map(|(k, _)| *k)
                    .find(|name| *name == k.replace('-', "_"))
                    .ok_or_else(|| Error::validation(format!("unknown config key {k:?}")))?;
                map.insert(key, v.clone());
            }
        }
        let get = |k: &str| map[k].as_str();
        let model: ModelKind = get("model").parse()?;
        let seed: u64 = num("seed", get("seed"))?;
        let base = TrainConfig::for_kind(model);
        let auto = |k: &str| get(k) == "auto";
        let train = TrainConfig {
            learning_rate: if auto("learning_rate") {
                base.learning_rate
            } else {
                num("learning_rate", get("learning_rate"))?
            },
            batch_size: if auto("batch_size") {
                base.batch_size
            } else {
                num("batch_size", get("batch_size"))?
            },
            epochs: if auto("epochs") {
                base.epochs
            } else {
                num("epochs", get("epochs"))?
            },
            warmup_fraction: if auto("warmup_fraction") {
                base.warmup_fraction
            } else {
                num("warmup_fraction", get("warmup_fraction"))?
            },
            weight_decay: if auto("weight_decay") {
                base.weight_decay
            } else {
                num("weight_decay", get("weight_decay"))?
            },
            seed,
        };
        let cfg = RunConfig {
            seed,
            data_dir: PathBuf::from(get("data_dir")),
            reports_dir: PathBuf::from(get("reports_dir")),
            run_id: get("run_id").to_owned(),
            feature: get("feature").parse()?,
            model,
            train,
            alpha: num("alpha", get("alpha"))?,
            vocab_size: num("vocab_size", get("vocab_size"))?,
            min_df: num("min_df", get("min_df"))?,
            mlp: MlpConfig {
                embed_dim: num("mlp_embed_dim", get("mlp_embed_dim"))?,
                hidden: list(get("mlp_hidden"), |s| num("mlp_hidden", s))?,
            },
            forest_trees: num("forest_trees", get("forest_trees"))?,
            forest_max_depth: num("forest_max_depth", get("forest_max_depth"))?,
            split: SplitRatios {
                train: num("train_ratio", get("train_ratio"))?,
                val: num("val_ratio", get("val_ratio"))?,
                test: num("test_ratio", get("test_ratio"))?,
            },
            tau: num("tau", get("tau"))?,
            query_batch: num("query_batch", get("query_batch"))?,
            committee: list(get("committee"), str::parse)?,
            committee_feature: get("committee_feature").parse()?,
            per_genre: num("per_genre", get("per_genre"))?,
            mixing: num("mixing", get("mixing"))?,
            block_size: num("block_size", get("block_size"))?,
        };
        cfg.train.validate()?;
        cfg.split.validate()?;
        cfg.session_config().validate()?;
        cfg.synthetic_spec().validate()?;
        Ok(cfg)
    }

    /// Override layers in precedence order: `RECIPEFORGE_DATA_DIR`, then
    /// `config_file`, then `flags`.
    pub fn layers(config_file: Option<&Path>, flags: Vec<(String, String)>) -> Result<Vec<Vec<(String, String)>>> {
        let mut layers = Vec::new();
        if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
            layers.push(vec![("data_dir".to_owned(), dir)]);
        }
        if let Some(p) = config_file {
            layers.push(read_settings(p)?);
        }
        layers.push(flags);
        Ok(layers)
    }

    pub fn load(config_file: Option<&Path>, flags: Vec<(String, String)>) -> Result<RunConfig> {
        RunConfig::resolve(&RunConfig::layers(config_file, flags)?)
    }

    /// The resolved configuration in `key = value` form, keys in the order
    /// of [`KEYS`].
    pub fn to_settings(&self) -> String {
        let join = |v: &[ModelKind]| v.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
        let hidden = self
            .mlp
            .hidden
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let values: Vec<String> = vec![
            self.seed.to_string(),
            self.data_dir.display().to_string(),
            self.reports_dir.display().to_string(),
            self.run_id.clone(),
            self.feature.to_string(),
            self.model.as_str().to_owned(),
            self.train.learning_rate.to_string(),
            self.train.batch_size.to_string(),
            self.train.epochs.to_string(),
            self.train.warmup_fraction.to_string(),
            self.train.weight_decay.to_string(),
            self.alpha.to_string(),
            self.vocab_size.to_string(),
            self.min_df.to_string(),
            self.mlp.embed_dim.to_string(),
            hidden,
            self.forest_trees.to_string(),
            self.forest_max_depth.to_string(),
            self.split.train.to_string(),
            self.split.val.to_string(),
            self.split.test.to_string(),
            self.tau.to_string(),
            self.query_batch.to_string(),
            join(&self.committee),
            self.committee_feature.to_string(),
            self.per_genre.to_string(),
            self.mixing.to_string(),
            self.block_size.to_string(),
        ];
        let mut out = String::new();
        for ((k, _), v) in KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// Relative paths are taken from the data directory.
    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.data_dir.join(p)
        }
    }

    pub fn model_settings(&self) -> ModelSettings {
        ModelSettings {
            kind: self.model,
            train: self.train,
            alpha: self.alpha,
            mlp: self.mlp.clone(),
            forest: ForestConfig {
                trees: self.forest_trees,
                max_depth: self.forest_max_depth,
                seed: self.seed,
                ..ForestConfig::default()
            },
        }
    }

    /// Settings for another model kind, keeping explicit overrides shared.
    pub fn model_settings_for(&self, kind: ModelKind, train: TrainConfig) -> ModelSettings {
        ModelSettings {
            kind,
            train,
            ..self.model_settings()
        }
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            tau: self.tau,
            batch: self.query_batch,
            seed: self.seed,
            committee: CommitteeConfig {
                members: self.committee.clone(),
                feature: self.committee_feature,
                alpha: self.alpha,
                ..CommitteeConfig::default()
            },
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticCorpusSpec {
        SyntheticCorpusSpec {
            per_genre: self.per_genre,
            mixing: self.mixing,
            seed: self.seed,
            ..SyntheticCorpusSpec::default()
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::resolve(&[]).expect("built-in defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.seed, 2023);
        assert_eq!(c.model, ModelKind::Svm);
        assert_eq!(
            c.train,
            TrainConfig {
                seed: 2023,
                ..TrainConfig::linear()
            }
        );
        assert_eq!(
            c.committee,
            vec![ModelKind::NaiveBayes, ModelKind::Logistic, ModelKind::Svm]
        );
    }

    #[test]
    fn later_layers_win() {
        let file = parse_settings("# comment\nseed = 5\nmodel = mlp\nepochs = 3\n\n").unwrap();
        let flags = kv(&[("seed", "9"), ("learning-rate", "0.25")]);
        let c = RunConfig::resolve(&[file, flags]).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.model, ModelKind::Mlp);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, 0.25);
        assert_eq!(c.train.batch_size, TrainConfig::mlp().batch_size);
    }

    #[test]
    fn settings_roundtrip() {
        let c = RunConfig::resolve(&[kv(&[("model", "forest"), ("mlp_hidden", "32,16"), ("mixing", "0.35")])]).unwrap();
        let again = RunConfig::resolve(&[parse_settings(&c.to_settings()).unwrap()]).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn bad_input() {
        assert!(RunConfig::resolve(&[kv(&[("colour", "red")])]).is_err());
        assert!(RunConfig::resolve(&[kv(&[("seed", "x")])]).is_err());
        assert!(RunConfig::resolve(&[kv(&[("train_ratio", "0.9")])]).is_err());
        assert!(parse_settings("seed 5").is_err());
    }
}
