use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    predict_genre, read_container, write_container, ForestConfig, ForestModel, LinearKind, LinearModel, MlpConfig,
    MlpModel, Model, ModelKind, NaiveBayesModel, SequenceSet, TrainConfig, TrainLog, VectorSet,
};
use crate::corpus::RecipeRecord;
use crate::error::{Error, Result};
use crate::features::{compose_feature_text, encode_sequence, vectorize, FeatureSpec, Vocabulary};
use crate::genre::Genre;

/// Everything needed to train one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub kind: ModelKind,
    pub train: TrainConfig,
    pub alpha: f64,
    pub mlp: MlpConfig,
    pub forest: ForestConfig,
}

impl ModelSettings {
    pub fn new(kind: ModelKind, seed: u64) -> ModelSettings {
        ModelSettings {
            kind,
            train: TrainConfig {
                seed,
                ..TrainConfig::for_kind(kind)
            },
            alpha: 1.0,
            mlp: MlpConfig::default(),
            forest: ForestConfig {
                seed,
                ..ForestConfig::default()
            },
        }
    }
}

/// A trained model bundled with the vocabulary and feature spec that
/// produced its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub feature: FeatureSpec,
    pub vocab: Vocabulary,
    pub model: Model,
}

fn labels_of(records: &[&RecipeRecord]) -> Result<Vec<Genre>> {
    records
        .iter()
        .map(|r| {
            r.genre.ok_or_else(|| {
                Error::validation(format!("record {} has no label and cannot be used for training", r.id))
            })
        })
        .collect()
}

impl Classifier {
    pub fn train(
        records: &[&RecipeRecord],
        feature: FeatureSpec,
        vocab: Vocabulary,
        settings: &ModelSettings,
    ) -> Result<(Classifier, TrainLog)> {
        let labels = labels_of(records)?;
        check_records_ref(records, feature)?;
        let (model, log) = match settings.kind {
            ModelKind::Mlp => {
                let seqs = records
                    .par_iter()
                    .map(|r| encode_sequence(&compose_feature_text(r, feature)?, &vocab, feature.max_len()))
                    .collect::<Result<Vec<_>>>()?;
                let data = SequenceSet::new(seqs, labels, vocab.len())?;
                let (m, log) = MlpModel::train(&data, &settings.mlp, &settings.train)?;
                (Model::Mlp(m), log)
            }
            kind => {
                let vectors = records
                    .par_iter()
                    .map(|r| Ok(vectorize(&compose_feature_text(r, feature)?, &vocab)))
                    .collect::<Result<Vec<_>>>()?;
                let data = VectorSet::new(vectors, labels, vocab.len())?;
                match kind {
                    ModelKind::NaiveBayes => (
                        Model::NaiveBayes(NaiveBayesModel::train(&data, settings.alpha)?),
                        TrainLog::default(),
                    ),
                    ModelKind::Logistic => {
                        let (m, log) = LinearModel::train(LinearKind::SoftmaxRegression, &data, &settings.train)?;
                        (Model::Linear(m), log)
                    }
                    ModelKind::Svm => {
                        let (m, log) = LinearModel::train(LinearKind::OvrHinge, &data, &settings.train)?;
                        (Model::Linear(m), log)
                    }
                    ModelKind::Forest => (
                        Model::Forest(ForestModel::train(&data, &settings.forest)?),
                        TrainLog::default(),
                    ),
                    ModelKind::Mlp => unreachable!("handled above"),
                }
            }
        };
        Ok((Classifier { feature, vocab, model }, log))
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    /// Probabilities over the nine genres (softmax over margins for SVM).
    pub fn predict_proba(&self, record: &RecipeRecord) -> Result<Vec<f64>> {
        let text = compose_feature_text(record, self.feature)?;
        match &self.model {
            Model::Mlp(m) => m.predict_proba(&encode_sequence(&text, &self.vocab, self.feature.max_len())?),
            Model::NaiveBayes(m) => m.predict_proba(&vectorize(&text, &self.vocab)),
            Model::Linear(m) => m.predict_proba(&vectorize(&text, &self.vocab)),
            Model::Forest(m) => m.predict_proba(&vectorize(&text, &self.vocab)),
        }
    }

    pub fn predict_proba_batch(&self, records: &[&RecipeRecord]) -> Result<Vec<Vec<f64>>> {
        check_records_ref(records, self.feature)?;
        records.par_iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn predict(&self, record: &RecipeRecord) -> Result<Genre> {
        predict_genre(&self.predict_proba(record)?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_container(&mut buf, self.feature, &self.vocab, &self.model)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Classifier> {
        let (header, vocab, model) = read_container(bytes)?;
        Ok(Classifier {
            feature: header.feature,
            vocab,
            model,
        })
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".txt");
        PathBuf::from(name)
    }

    /// Writes the binary model and a text summary next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))?;
        let side = Classifier::sidecar_path(path);
        std::fs::write(&side, self.summary()).map_err(|e| Error::io(side, e))
    }

    pub fn load(path: &Path) -> Result<Classifier> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Classifier::from_bytes(&bytes)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind: {}", self.kind());
        let _ = writeln!(s, "feature: {}", self.feature);
        let _ = writeln!(
            s,
            "vocabulary: {} entries ({} terms)",
            self.vocab.len(),
            self.vocab.terms().len()
        );
        match &self.model {
            Model::NaiveBayes(m) => {
                let _ = writeln!(s, "alpha: {}", m.alpha());
                for g in Genre::ALL {
                    let _ = writeln!(s, "prior {:<11} {:.6}", g.name(), m.log_prior()[g.index()].exp());
                }
            }
            Model::Linear(m) => {
                if m.kind() == LinearKind::OvrHinge {
                    let _ = writeln!(s, "probabilities: softmax over margins, not calibrated");
                }
                for g in Genre::ALL {
                    let mut top: Vec<(f64, usize)> = (0..m.dim()).map(|i| (m.weight(g.index(), i), i)).collect();
                    top.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    let words: Vec<&str> = top
                        .iter()
                        .take(5)
                        .filter_map(|&(_, i)| self.vocab.term(i as u32))
                        .collect();
                    let _ = writeln!(s, "top {:<11} {}", g.name(), words.join(" "));
                }
            }
            Model::Mlp(m) => {
                let _ = writeln!(s, "embedding: {}", m.embed_dim());
                let _ = writeln!(s, "hidden: {:?}", m.hidden());
                let _ = writeln!(s, "parameters: {}", m.params().len());
            }
            Model::Forest(m) => {
                let leaves: usize = m.leaf_histograms().iter().map(Vec::len).sum();
                let _ = writeln!(s, "trees: {}", m.tree_count());
                let _ = writeln!(s, "leaves: {leaves}");
            }
        }
        s
    }
}

fn check_records_ref(records: &[&RecipeRecord], feature: FeatureSpec) -> Result<()> {
    if feature == FeatureSpec::TitleExtNer {
        if let Some(r) = records.iter().find(|r| r.extended_ner.is_none()) {
            return Err(Error::validation(format!(
                "record {} has no extended entities; run extend-ner on the corpus first",
                r.id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn rec(id: u64, title: &str, g: Genre) -> RecipeRecord {
        RecipeRecord {
            id,
            title: title.into(),
            directions: vec!["Mix.".into()],
            ner: vec![],
            extended_ner: None,
            genre: Some(g),
            provenance: Provenance::Human,
        }
    }

    #[test]
    fn every_kind_trains_and_roundtrips() {
        let recs = [
            rec(0, "chocolate cake", Genre::Bakery),
            rec(1, "banana cake", Genre::Bakery),
            rec(2, "iced tea", Genre::Drinks),
            rec(3, "mint tea", Genre::Drinks),
        ];
        let refs: Vec<&RecipeRecord> = recs.iter().collect();
        let vocab = Vocabulary::build(&recs, FeatureSpec::Title, 100, 1).unwrap();
        for kind in ModelKind::ALL {
            let mut settings = ModelSettings::new(kind, 3);
            settings.train.epochs = 50;
            settings.train.learning_rate = 0.5;
            settings.mlp = MlpConfig {
                embed_dim: 8,
                hidden: vec![8],
            };
            settings.forest.trees = 5;
            let (c, _) = Classifier::train(&refs, FeatureSpec::Title, vocab.clone(), &settings).unwrap();
            let back = Classifier::from_bytes(&c.to_bytes().unwrap()).unwrap();
            assert_eq!(back, c, "{kind}");
            assert_eq!(
                c.predict(&rec(9, "lemon tea", Genre::Drinks)).unwrap(),
                Genre::Drinks,
                "{kind}"
            );
            assert!(!c.summary().is_empty());
        }
    }

    #[test]
    fn unlabeled_training_rejected() {
        let mut r = rec(0, "x", Genre::Bakery);
        r.genre = None;
        r.provenance = Provenance::Unlabeled;
        let vocab = Vocabulary::from_terms(["x"]);
        let err = Classifier::train(
            &[&r],
            FeatureSpec::Title,
            vocab,
            &ModelSettings::new(ModelKind::NaiveBayes, 0),
        );
        assert!(err.is_err());
    }
}
