use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{auc, confusion, precision_recall_f1, roc_curve, ConfusionMatrix, GenreScores, RocCurve};
use crate::corpus::{RecipeRecord, SplitPart};
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::genre::Genre;
use crate::models::{predict_genre, Classifier, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub feature: FeatureSpec,
    pub split: SplitPart,
    pub records: u64,
    /// `None` means no data.
    pub accuracy: Option<f64>,
    pub per_genre: Vec<GenreScores>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    /// One-vs-rest AUC; `None` where the split lacks positives or negatives.
    pub auc: Vec<Option<f64>>,
    pub macro_auc: Option<f64>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub curves: Vec<RocCurve>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<MetricsReport> {
        Ok(serde_json::from_str(text)?)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "model {}  feature {}  split {}  records {}",
            self.model.as_str(),
            self.feature,
            self.split.as_str(),
            self.records
        )?;
        match self.accuracy {
            Some(a) => writeln!(f, "accuracy {a:.4}")?,
            None => writeln!(f, "accuracy n/a (no data)")?,
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<11} {:>9} {:>9} {:>9} {:>8} {:>9}",
            "genre", "precision", "recall", "f1", "support", "auc"
        )?;
        for (s, a) in self.per_genre.iter().zip(&self.auc) {
            let p = if s.precision_defined {
                format!("{:.4}", s.precision)
            } else {
                "n/a".into()
            };
            let r = if s.recall_defined {
                format!("{:.4}", s.recall)
            } else {
                "n/a".into()
            };
            writeln!(
                f,
                "{:<11} {:>9} {:>9} {:>9.4} {:>8} {:>9}",
                s.genre.name(),
                p,
                r,
                s.f1,
                s.support,
                opt(*a)
            )?;
        }
        writeln!(
            f,
            "{:<11} {:>9} {:>9} {:>9} {:>8} {:>9}",
            "macro",
            opt(self.macro_precision),
            opt(self.macro_recall),
            opt(self.macro_f1),
            self.records,
            opt(self.macro_auc)
        )?;
        writeln!(f)?;
        writeln!(f, "confusion (rows gold, columns predicted)")?;
        let mut header = format!("{:<11}", "");
        for g in Genre::ALL {
            write!(header, " {:>6}", g.id()).unwrap();
        }
        writeln!(f, "{header}")?;
        for g in Genre::ALL {
            write!(f, "{:<11}", g.name())?;
            for c in &self.confusion.counts[g.index()] {
                write!(f, " {c:>6}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Scores `records` with `classifier`. Every record must carry a gold label
/// and the fields its feature spec reads; this is checked up front.
pub fn evaluate(classifier: &Classifier, records: &[&RecipeRecord], split: SplitPart) -> Result<Evaluation> {
    let golds = records
        .iter()
        .map(|r| {
            r.genre
                .ok_or_else(|| Error::validation(format!("record {} has no gold label to evaluate against", r.id)))
        })
        .collect::<Result<Vec<Genre>>>()?;
    let probs = classifier.predict_proba_batch(records)?;
    let preds = probs.iter().map(|p| predict_genre(p)).collect::<Result<Vec<_>>>()?;
    let matrix = confusion(&golds, &preds)?;
    let prf = precision_recall_f1(&matrix);

    let mut curves = Vec::new();
    let mut aucs = Vec::with_capacity(Genre::ALL.len());
    for g in Genre::ALL {
        let positive: Vec<bool> = golds.iter().map(|&x| x == g).collect();
        let has_both = positive.iter().any(|&p| p) && positive.iter().any(|&p| !p);
        if !has_both {
            aucs.push(None);
            continue;
        }
        let scores: Vec<f64> = probs.iter().map(|p| p[g.index()]).collect();
        let curve = roc_curve(g, &scores, &positive)?;
        aucs.push(Some(auc(&curve)));
        curves.push(curve);
    }
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    let macro_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);

    Ok(Evaluation {
        report: MetricsReport {
            model: classifier.kind(),
            feature: classifier.feature,
            split,
            records: records.len() as u64,
            accuracy: matrix.accuracy(),
            per_genre: prf.per_genre,
            macro_precision: prf.macro_precision,
            macro_recall: prf.macro_recall,
            macro_f1: prf.macro_f1,
            auc: aucs,
            macro_auc,
            confusion: matrix,
        },
        curves,
    })
}

/// Writes `metrics.json`, `metrics.txt` and one `roc_<genre>.csv` per curve
/// into `dir`, creating it if needed.
pub fn write_report_dir(dir: &Path, eval: &Evaluation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write("metrics.json", eval.report.to_json()? + "\n")?;
    write("metrics.txt", eval.report.to_string())?;
    for c in &eval.curves {
        let mut body = String::from("threshold,fpr,tpr,true_positives,false_positives\n");
        for p in &c.points {
            writeln!(
                body,
                "{},{},{},{},{}",
                p.threshold, p.fpr, p.tpr, p.true_positives, p.false_positives
            )
            .unwrap();
        }
        write(&format!("roc_{}.csv", c.genre.slug()), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;
    use crate::features::Vocabulary;
    use crate::models::ModelSettings;

    fn record(id: u64, genre: Genre, title: &str) -> RecipeRecord {
        RecipeRecord {
            id,
            title: title.into(),
            directions: vec!["Mix.".into()],
            ner: vec![],
            extended_ner: None,
            genre: Some(genre),
            provenance: Provenance::Human,
        }
    }

    fn corpus() -> Vec<RecipeRecord> {
        let mut out = Vec::new();
        for g in Genre::ALL {
            for k in 0..4 {
                out.push(record(out.len() as u64 + 1, g, &format!("{} dish {k}", g.slug())));
            }
        }
        out
    }

    fn trained(records: &[&RecipeRecord]) -> Classifier {
        let vocab = Vocabulary::build(records.iter().copied(), FeatureSpec::Title, 100, 1).unwrap();
        let settings = ModelSettings::new(ModelKind::NaiveBayes, 1);
        Classifier::train(records, FeatureSpec::Title, vocab, &settings)
            .unwrap()
            .0
    }

    #[test]
    fn separable_corpus_scores_perfectly() {
        let recs = corpus();
        let refs: Vec<&RecipeRecord> = recs.iter().collect();
        let clf = trained(&refs);
        let ev = evaluate(&clf, &refs, SplitPart::All).unwrap();
        let r = &ev.report;
        assert_eq!(r.accuracy, Some(1.0));
        assert_eq!(
            r.accuracy.unwrap(),
            r.confusion.trace() as f64 / r.confusion.total() as f64
        );
        assert!(r.auc.iter().all(|a| *a == Some(1.0)));
        assert_eq!(ev.curves.len(), 9);
        assert_eq!(MetricsReport::from_json(&r.to_json().unwrap()).unwrap(), *r);
        let text = r.to_string();
        assert!(text.contains("accuracy 1.0000") && text.contains("Fusion"));
    }

    #[test]
    fn rejects_unlabeled_before_predicting() {
        let recs = corpus();
        let refs: Vec<&RecipeRecord> = recs.iter().collect();
        let clf = trained(&refs);
        let mut bad = recs[0].clone();
        bad.genre = None;
        assert!(evaluate(&clf, &[&bad], SplitPart::Test).is_err());
    }

    #[test]
    fn empty_split_reports_no_data() {
        let recs = corpus();
        let refs: Vec<&RecipeRecord> = recs.iter().collect();
        let clf = trained(&refs);
        let ev = evaluate(&clf, &[], SplitPart::Val).unwrap();
        assert_eq!(ev.report.accuracy, None);
        assert_eq!(ev.report.macro_auc, None);
        assert!(ev.report.to_string().contains("no data"));
    }

    #[test]
    fn report_dir_files() {
        let recs = corpus();
        let refs: Vec<&RecipeRecord> = recs.iter().collect();
        let ev = evaluate(&trained(&refs), &refs, SplitPart::All).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report_dir(dir.path(), &ev).unwrap();
        for name in ["metrics.json", "metrics.txt", "roc_bakery.csv", "roc_fusion.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let json = fs::read_to_string(dir.path().join("metrics.json")).unwrap();
        assert_eq!(MetricsReport::from_json(&json).unwrap(), ev.report);
    }
}
