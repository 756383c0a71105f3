use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::RecipeRecord;
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, Vocabulary};
use crate::genre::{Genre, GENRE_COUNT};
use crate::models::{predict_genre, Classifier, ModelKind, ModelSettings, TrainConfig};

/// Shannon entropy (nats) of a hard-vote distribution.
pub fn vote_entropy(votes: &[Genre]) -> Result<f64> {
    if votes.len() < 2 {
        return Err(Error::validation(format!(
            "vote entropy needs at least 2 votes, got {}",
            votes.len()
        )));
    }
    let mut counts = [0usize; GENRE_COUNT];
    for v in votes {
        counts[v.index()] += 1;
    }
    // Sorted so equal vote multisets give bit-identical results.
    counts.sort_unstable();
    let m = votes.len() as f64;
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / m;
            p * p.ln()
        })
        .sum::<f64>()
        + 0.0) // turns -0 into 0
}

/// Orders by entropy descending, then id ascending.
pub fn rank_order(a: &(u64, f64), b: &(u64, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitteeConfig {
    pub members: Vec<ModelKind>,
    pub feature: FeatureSpec,
    pub alpha: f64,
    /// Training schedule for the gradient-trained members.
    pub train: TrainConfig,
    pub vocab_max: usize,
    pub min_df: usize,
}

impl Default for CommitteeConfig {
    fn default() -> Self {
        CommitteeConfig {
            members: vec![ModelKind::NaiveBayes, ModelKind::Logistic, ModelKind::Svm],
            feature: FeatureSpec::TitleNer,
            alpha: 1.0,
            train: TrainConfig {
                learning_rate: 1.0,
                batch_size: 8,
                epochs: 40,
                warmup_fraction: 0.1,
                weight_decay: 0.0,
                seed: 0,
            },
            vocab_max: 50_000,
            min_df: 1,
        }
    }
}

/// What the committee thinks of one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub id: u64,
    pub votes: Vec<Genre>,
    pub probabilities: Vec<Vec<f64>>,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoLabel {
    pub id: u64,
    pub genre: Genre,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Committee {
    members: Vec<Classifier>,
}

impl Committee {
    pub fn new(members: Vec<Classifier>) -> Result<Committee> {
        if members.len() < 2 {
            return Err(Error::validation(format!(
                "a committee needs at least 2 members, got {}",
                members.len()
            )));
        }
        let first = &members[0];
        if members
            .iter()
            .any(|m| m.vocab != first.vocab || m.feature != first.feature)
        {
            return Err(Error::validation(
                "committee members must share vocabulary and feature spec",
            ));
        }
        Ok(Committee { members })
    }

    /// Trains every configured member on `labeled`, with a vocabulary built
    /// from the same records.
    pub fn train(labeled: &[&RecipeRecord], cfg: &CommitteeConfig, seed: u64) -> Result<Committee> {
        if labeled.is_empty() {
            return Err(Error::validation("committee needs at least one labeled record"));
        }
        let vocab = Vocabulary::build(labeled.iter().copied(), cfg.feature, cfg.vocab_max, cfg.min_df)?;
        let members = cfg
            .members
            .par_iter()
            .map(|&kind| {
                let mut settings = ModelSettings::new(kind, seed);
                settings.alpha = cfg.alpha;
                if kind != ModelKind::Mlp {
                    settings.train = TrainConfig { seed, ..cfg.train };
                }
                Classifier::train(labeled, cfg.feature, vocab.clone(), &settings).map(|(c, _)| c)
            })
            .collect::<Result<Vec<_>>>()?;
        Committee::new(members)
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    pub fn kinds(&self) -> Vec<ModelKind> {
        self.members.iter().map(Classifier::kind).collect()
    }

    pub fn opinion(&self, record: &RecipeRecord) -> Result<Opinion> {
        let probabilities = self
            .members
            .iter()
            .map(|m| m.predict_proba(record))
            .collect::<Result<Vec<_>>>()?;
        let votes = probabilities
            .iter()
            .map(|p| predict_genre(p))
            .collect::<Result<Vec<_>>>()?;
        let entropy = vote_entropy(&votes)?;
        Ok(Opinion {
            id: record.id,
            votes,
            probabilities,
            entropy,
        })
    }

    pub fn opinions(&self, pool: &[&RecipeRecord]) -> Result<Vec<Opinion>> {
        pool.par_iter().map(|r| self.opinion(r)).collect()
    }

    /// Members whose outputs are probabilities; falls back to all members if
    /// none are.
    fn confidence_members(&self) -> Vec<usize> {
        let calibrated: Vec<usize> = (0..self.members.len())
            .filter(|&k| self.members[k].kind().is_calibrated())
            .collect();
        if calibrated.is_empty() {
            (0..self.members.len()).collect()
        } else {
            calibrated
        }
    }

    /// Mean probability assigned to `genre` by the calibrated members.
    pub fn confidence(&self, opinion: &Opinion, genre: Genre) -> f64 {
        let idx = self.confidence_members();
        idx.iter()
            .map(|&k| opinion.probabilities[k][genre.index()])
            .sum::<f64>()
            / idx.len() as f64
    }
}

/// (id, entropy) pairs ranked by entropy descending, ties by ascending id.
pub fn rank_opinions(opinions: &[Opinion]) -> Vec<(u64, f64)> {
    let mut ranked: Vec<(u64, f64)> = opinions.iter().map(|o| (o.id, o.entropy)).collect();
    ranked.sort_by(rank_order);
    ranked
}

pub fn rank_pool(committee: &Committee, pool: &[&RecipeRecord]) -> Result<Vec<(u64, f64)>> {
    Ok(rank_opinions(&committee.opinions(pool)?))
}

pub fn select_queries(committee: &Committee, pool: &[&RecipeRecord], b: usize) -> Result<Vec<u64>> {
    let mut ranked = rank_pool(committee, pool)?;
    ranked.truncate(b);
    Ok(ranked.into_iter().map(|(id, _)| id).collect())
}

/// Opinions on which every member votes the same genre and the mean
/// calibrated probability of that genre is at least `tau`.
pub fn auto_labels_from(committee: &Committee, opinions: &[Opinion], tau: f64) -> Result<Vec<AutoLabel>> {
    check_tau(tau)?;
    let mut out = Vec::new();
    for o in opinions {
        let first = o.votes[0];
        if o.votes.iter().any(|&v| v != first) {
            continue;
        }
        let confidence = committee.confidence(o, first);
        if confidence >= tau {
            out.push(AutoLabel {
                id: o.id,
                genre: first,
                confidence,
            });
        }
    }
    Ok(out)
}

pub fn auto_label(committee: &Committee, pool: &[&RecipeRecord], tau: f64) -> Result<Vec<AutoLabel>> {
    check_tau(tau)?;
    auto_labels_from(committee, &committee.opinions(pool)?, tau)
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "confidence threshold must be in (0, 1], got {tau}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    #[test]
    fn entropy_examples() {
        assert_eq!(vote_entropy(&[Genre::NonVeg; 3]).unwrap(), 0.0);
        let h = vote_entropy(&[Genre::Bakery, Genre::Bakery, Genre::Drinks]).unwrap();
        assert!((h - 0.6365141682948128).abs() < 1e-12);
        assert!((vote_entropy(&Genre::ALL).unwrap() - 9f64.ln()).abs() < 1e-12);
        assert!(vote_entropy(&[Genre::Meal]).is_err());
        // Order of votes does not change a single bit.
        let a = vote_entropy(&[Genre::Sides, Genre::Meal, Genre::Meal, Genre::Fusion]).unwrap();
        let b = vote_entropy(&[Genre::Meal, Genre::Fusion, Genre::Meal, Genre::Sides]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    fn rec(id: u64, title: &str, genre: Option<Genre>) -> RecipeRecord {
        RecipeRecord {
            id,
            title: title.into(),
            directions: vec!["Serve.".into()],
            ner: vec![],
            extended_ner: None,
            genre,
            provenance: if genre.is_some() {
                Provenance::Human
            } else {
                Provenance::Unlabeled
            },
        }
    }

    fn committee() -> Committee {
        let labeled = [
            rec(0, "chocolate cake", Some(Genre::Bakery)),
            rec(1, "vanilla cake", Some(Genre::Bakery)),
            rec(2, "iced tea", Some(Genre::Drinks)),
            rec(3, "green tea", Some(Genre::Drinks)),
        ];
        let refs: Vec<&RecipeRecord> = labeled.iter().collect();
        let cfg = CommitteeConfig {
            feature: FeatureSpec::Title,
            ..CommitteeConfig::default()
        };
        Committee::train(&refs, &cfg, 1).unwrap()
    }

    #[test]
    fn queries_and_auto_labels() {
        let c = committee();
        let pool = [
            rec(10, "lemon cake", None),
            rec(11, "mint tea", None),
            rec(12, "mystery", None),
        ];
        let refs: Vec<&RecipeRecord> = pool.iter().collect();
        let ranked = rank_pool(&c, &refs).unwrap();
        assert_eq!(ranked.len(), 3);
        assert!(ranked.windows(2).all(|w| rank_order(&w[0], &w[1]) != Ordering::Greater));
        assert_eq!(select_queries(&c, &refs, 10).unwrap().len(), 3);
        assert_eq!(select_queries(&c, &refs, 1).unwrap(), vec![ranked[0].0]);

        let labels = auto_label(&c, &refs, 0.5).unwrap();
        let ids: Vec<u64> = labels.iter().map(|l| l.id).collect();
        assert!(ids.contains(&10) && ids.contains(&11), "{labels:?}");
        assert!(labels.iter().all(|l| l.confidence >= 0.5));
        assert!(auto_label(&c, &refs, 1.0).unwrap().is_empty());
        assert!(auto_label(&c, &refs, 0.0).is_err());
    }

    #[test]
    fn unanimous_pool_queries_lowest_ids() {
        let c = committee();
        let pool = [
            rec(7, "plain cake", None),
            rec(5, "plain cake", None),
            rec(6, "plain cake", None),
        ];
        let refs: Vec<&RecipeRecord> = pool.iter().collect();
        assert_eq!(select_queries(&c, &refs, 2).unwrap(), vec![5, 6]);
    }
}
