//! Human-in-the-loop annotation rounds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::committee::{auto_labels_from, check_tau, rank_opinions, Committee, CommitteeConfig, Opinion};
use crate::corpus::{read_canonical_from, write_canonical_to, Provenance, RecipeRecord};
use crate::error::{Error, Result};
use crate::genre::Genre;
use crate::models::ModelKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub tau: f64,
    pub batch: usize,
    pub seed: u64,
    pub committee: CommitteeConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            tau: 0.99,
            batch: 10,
            seed: 0,
            committee: CommitteeConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if self.batch == 0 {
            return Err(Error::validation("query batch size must be at least 1"));
        }
        if self.committee.members.len() < 2 {
            return Err(Error::validation("a committee needs at least 2 members"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberVote {
    pub model: ModelKind,
    pub genre: Genre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub surface: String,
    pub category: String,
}

/// A queued record as shown to the annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub record_id: u64,
    pub title: String,
    pub directions: Vec<String>,
    pub extended_ner: Vec<EntityView>,
    pub committee_votes: Vec<MemberVote>,
    pub vote_entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOutcome {
    pub accepted: bool,
    pub remaining_in_batch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u64,
    pub human_labeled: usize,
    pub auto_labeled: usize,
    pub queried: usize,
    pub pool_remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub round: u64,
    pub human: usize,
    pub machine: usize,
    pub pool_remaining: usize,
    pub queued: usize,
    pub answered: usize,
    pub committee: Vec<ModelKind>,
    /// Share of the pool on which all members voted alike at the last
    /// refresh; absent before the first committee exists or when the pool
    /// was empty.
    pub committee_agreement: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AnnotationSession {
    config: SessionConfig,
    records: BTreeMap<u64, RecipeRecord>,
    pool: BTreeSet<u64>,
    round: u64,
    queue: Vec<u64>,
    opinions: HashMap<u64, Opinion>,
    answers: BTreeMap<u64, (Genre, LabelOutcome)>,
    committee: Option<Committee>,
    agreement: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    recipeforge_session: u32,
    round: u64,
    tau: f64,
    batch: usize,
    seed: u64,
    committee: CommitteeConfig,
    queue: Vec<u64>,
    answers: Vec<(u64, Genre)>,
}

impl AnnotationSession {
    /// Labeled records seed the committee; unlabeled ones form the pool.
    /// The first query batch is selected immediately.
    pub fn new(records: Vec<RecipeRecord>, config: SessionConfig) -> Result<AnnotationSession> {
        config.validate()?;
        let mut map = BTreeMap::new();
        for r in records {
            r.validate()?;
            let id = r.id;
            if map.insert(id, r).is_some() {
                return Err(Error::validation(format!("duplicate record id {id}")));
            }
        }
        let pool = map.values().filter(|r| r.genre.is_none()).map(|r| r.id).collect();
        let mut s = AnnotationSession {
            config,
            records: map,
            pool,
            round: 0,
            queue: Vec::new(),
            opinions: HashMap::new(),
            answers: BTreeMap::new(),
            committee: None,
            agreement: None,
        };
        s.retrain()?;
        let opinions = s.pool_opinions()?;
        s.queue_from(opinions);
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn records(&self) -> impl Iterator<Item = &RecipeRecord> {
        self.records.values()
    }

    pub fn record(&self, id: u64) -> Option<&RecipeRecord> {
        self.records.get(&id)
    }

    pub fn pool(&self) -> &BTreeSet<u64> {
        &self.pool
    }

    pub fn queue(&self) -> &[u64] {
        &self.queue
    }

    pub fn committee(&self) -> Option<&Committee> {
        self.committee.as_ref()
    }

    fn labeled(&self) -> Vec<&RecipeRecord> {
        self.records.values().filter(|r| r.genre.is_some()).collect()
    }

    fn retrain(&mut self) -> Result<()> {
        let labeled = self.labeled();
        self.committee = if labeled.is_empty() {
            None
        } else {
            Some(Committee::train(&labeled, &self.config.committee, self.config.seed)?)
        };
        Ok(())
    }

    fn pool_opinions(&self) -> Result<Vec<Opinion>> {
        let Some(c) = &self.committee else {
            return Ok(Vec::new());
        };
        let pool: Vec<&RecipeRecord> = self.pool.iter().map(|id| &self.records[id]).collect();
        c.opinions(&pool)
    }

    /// Fills the queue from `opinions` (or lowest ids when there is no
    /// committee yet) and records pool agreement.
    fn queue_from(&mut self, opinions: Vec<Opinion>) {
        self.answers.clear();
        self.opinions.clear();
        if self.committee.is_none() {
            self.queue = self.pool.iter().take(self.config.batch).copied().collect();
            self.agreement = None;
            return;
        }
        self.agreement = if opinions.is_empty() {
            None
        } else {
            let unanimous = opinions
                .iter()
                .filter(|o| o.votes.iter().all(|&v| v == o.votes[0]))
                .count();
            Some(unanimous as f64 / opinions.len() as f64)
        };
        let ranked = rank_opinions(&opinions);
        self.queue = ranked.iter().take(self.config.batch).map(|&(id, _)| id).collect();
        let keep: BTreeSet<u64> = self.queue.iter().copied().collect();
        self.opinions = opinions
            .into_iter()
            .filter(|o| keep.contains(&o.id))
            .map(|o| (o.id, o))
            .collect();
    }

    /// The first queued record without a submitted label.
    pub fn next_query(&self) -> Option<QueryView> {
        let id = *self.queue.iter().find(|id| !self.answers.contains_key(id))?;
        Some(self.view(id))
    }

    pub fn view(&self, id: u64) -> QueryView {
        let r = &self.records[&id];
        let (votes, entropy) = match (self.opinions.get(&id), &self.committee) {
            (Some(o), Some(c)) => (
                c.kinds()
                    .into_iter()
                    .zip(&o.votes)
                    .map(|(model, &genre)| MemberVote { model, genre })
                    .collect(),
                o.entropy,
            ),
            _ => (Vec::new(), 0.0),
        };
        QueryView {
            record_id: id,
            title: r.title.clone(),
            directions: r.directions.clone(),
            extended_ner: r
                .extended_ner
                .iter()
                .flat_map(|set| set.iter())
                .map(|e| EntityView {
                    surface: e.surface.clone(),
                    category: e.category.as_str().to_owned(),
                })
                .collect(),
            committee_votes: votes,
            vote_entropy: entropy,
        }
    }

    fn remaining_in_batch(&self) -> usize {
        self.queue.len() - self.answers.len()
    }

    fn check_label(&self, id: u64, genre: Genre) -> Result<Option<LabelOutcome>> {
        if !self.queue.contains(&id) {
            return Err(Error::validation(format!(
                "record {id} is not in the current query batch"
            )));
        }
        match self.answers.get(&id) {
            Some(&(g, outcome)) if g == genre => Ok(Some(outcome)),
            Some(&(g, _)) => Err(Error::Conflict(format!(
                "record {id} already labeled {} ({}); the first label stands",
                g.name(),
                g.id()
            ))),
            None => Ok(None),
        }
    }

    /// Records a human label for a queued record. Repeating the same label
    /// returns the original outcome; a different label is rejected.
    pub fn submit_label(&mut self, id: u64, genre: Genre) -> Result<LabelOutcome> {
        if let Some(outcome) = self.check_label(id, genre)? {
            return Ok(outcome);
        }
        let outcome = LabelOutcome {
            accepted: true,
            remaining_in_batch: self.remaining_in_batch() - 1,
        };
        self.answers.insert(id, (genre, outcome));
        Ok(outcome)
    }

    /// Ingests `labels` plus any already submitted, retrains the committee,
    /// auto-labels confident pool records and queues the next batch.
    /// Unanswered queries return to the pool.
    pub fn run_round(&mut self, labels: &[(u64, Genre)]) -> Result<RoundSummary> {
        for &(id, g) in labels {
            self.check_label(id, g)?;
        }
        let mut seen = BTreeMap::new();
        for &(id, g) in labels {
            if let Some(prev) = seen.insert(id, g) {
                if prev != g {
                    return Err(Error::Conflict(format!("record {id} given two different labels")));
                }
            }
        }
        for &(id, g) in labels {
            self.submit_label(id, g)?;
        }
        let answers = std::mem::take(&mut self.answers);
        let human_labeled = answers.len();
        for (id, (g, _)) in answers {
            self.assign(id, g, Provenance::Human);
        }
        self.queue.clear();
        self.opinions.clear();
        self.round += 1;
        if self.pool.is_empty() {
            self.agreement = None;
            return Ok(self.summary(human_labeled, 0));
        }

        self.retrain()?;
        let mut opinions = self.pool_opinions()?;
        let mut auto = 0;
        if let Some(c) = &self.committee {
            let labels = auto_labels_from(c, &opinions, self.config.tau)?;
            auto = labels.len();
            let done: BTreeSet<u64> = labels.iter().map(|l| l.id).collect();
            for l in labels {
                self.assign(l.id, l.genre, Provenance::Machine);
            }
            opinions.retain(|o| !done.contains(&o.id));
        }
        self.queue_from(opinions);
        Ok(self.summary(human_labeled, auto))
    }

    fn summary(&self, human_labeled: usize, auto_labeled: usize) -> RoundSummary {
        RoundSummary {
            round: self.round,
            human_labeled,
            auto_labeled,
            queried: self.queue.len(),
            pool_remaining: self.pool.len(),
        }
    }

    fn assign(&mut self, id: u64, genre: Genre, provenance: Provenance) {
        let r = self.records.get_mut(&id).expect("pool ids are records");
        r.genre = Some(genre);
        r.provenance = provenance;
        self.pool.remove(&id);
    }

    pub fn metrics(&self) -> SessionMetrics {
        let count = |p| {
            self.records
                .values()
                .filter(|r| r.provenance == p && r.genre.is_some())
                .count()
        };
        SessionMetrics {
            round: self.round,
            human: count(Provenance::Human),
            machine: count(Provenance::Machine),
            pool_remaining: self.pool.len(),
            queued: self.queue.len(),
            answered: self.answers.len(),
            committee: self.committee.as_ref().map(Committee::kinds).unwrap_or_default(),
            committee_agreement: self.agreement,
        }
    }

    /// A header line followed by every record in the canonical line format.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            recipeforge_session: 1,
            round: self.round,
            tau: self.config.tau,
            batch: self.config.batch,
            seed: self.config.seed,
            committee: self.config.committee.clone(),
            queue: self.queue.clone(),
            answers: self.answers.iter().map(|(&id, &(g, _))| (id, g)).collect(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(|e| Error::io("<checkpoint>", e))?;
        let records: Vec<RecipeRecord> = self.records.values().cloned().collect();
        write_canonical_to(w, &records)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Restores a session. The committee is retrained from the stored
    /// labels, so displayed votes for the restored queue may differ from
    /// the ones shown before saving.
    pub fn read_checkpoint<R: Read>(r: R) -> Result<AnnotationSession> {
        let mut reader = BufReader::new(r);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(|e| Error::io("<checkpoint>", e))?;
        let header: Header =
            serde_json::from_str(&first).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        if header.recipeforge_session != 1 {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                header.recipeforge_session
            )));
        }
        let records = read_canonical_from(reader)?;
        let config = SessionConfig {
            tau: header.tau,
            batch: header.batch,
            seed: header.seed,
            committee: header.committee,
        };
        config.validate()?;
        let map: BTreeMap<u64, RecipeRecord> = records.into_iter().map(|r| (r.id, r)).collect();
        let pool: BTreeSet<u64> = map.values().filter(|r| r.genre.is_none()).map(|r| r.id).collect();
        if let Some(id) = header.queue.iter().find(|id| !pool.contains(id)) {
            return Err(Error::Format(format!(
                "checkpoint queue holds record {id} outside the pool"
            )));
        }
        let mut s = AnnotationSession {
            config,
            records: map,
            pool,
            round: header.round,
            queue: header.queue,
            opinions: HashMap::new(),
            answers: BTreeMap::new(),
            committee: None,
            agreement: None,
        };
        s.retrain()?;
        if let Some(c) = &s.committee {
            let queued: Vec<&RecipeRecord> = s.queue.iter().map(|id| &s.records[id]).collect();
            s.opinions = c.opinions(&queued)?.into_iter().map(|o| (o.id, o)).collect();
        }
        for (id, g) in header.answers {
            s.submit_label(id, g)?;
        }
        Ok(s)
    }

    pub fn load_checkpoint(path: &Path) -> Result<AnnotationSession> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        AnnotationSession::read_checkpoint(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSpec;

    const WORDS: [[&str; 3]; 9] = [
        ["cake", "bread", "muffin"],
        ["tea", "smoothie", "lemonade"],
        ["chicken", "beef", "lamb"],
        ["kale", "spinach", "okra"],
        ["burger", "pizza", "hotdog"],
        ["oats", "granola", "cornflakes"],
        ["stew", "casserole", "roast"],
        ["fries", "coleslaw", "slaw"],
        ["taco", "sushi", "ramen"],
    ];

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

    fn corpus() -> (Vec<RecipeRecord>, BTreeMap<u64, Genre>) {
        let mut out = Vec::new();
        let mut truth = BTreeMap::new();
        let mut id = 0;
        for (g, words) in Genre::ALL.iter().zip(WORDS) {
            out.push(rec(id, &format!("{} {}", words[0], words[1]), Some(*g)));
            id += 1;
            for k in 0..4 {
                let title = format!("{} {}", words[k % 3], words[(k + 2) % 3]);
                out.push(rec(id, &title, None));
                truth.insert(id, *g);
                id += 1;
            }
        }
        (out, truth)
    }

    fn config() -> SessionConfig {
        SessionConfig {
            tau: 0.5,
            batch: 3,
            seed: 2,
            committee: CommitteeConfig {
                feature: FeatureSpec::Title,
                ..CommitteeConfig::default()
            },
        }
    }

    #[test]
    fn labeling_rules() {
        let (recs, truth) = corpus();
        let mut s = AnnotationSession::new(recs, config()).unwrap();
        assert_eq!(s.queue().len(), 3);
        let q = s.next_query().unwrap();
        assert_eq!(q.committee_votes.len(), 3);
        let g = truth[&q.record_id];
        let first = s.submit_label(q.record_id, g).unwrap();
        assert_eq!(
            first,
            LabelOutcome {
                accepted: true,
                remaining_in_batch: 2
            }
        );
        assert_eq!(s.submit_label(q.record_id, g).unwrap(), first);
        let other = if g == Genre::Bakery {
            Genre::Drinks
        } else {
            Genre::Bakery
        };
        assert!(matches!(s.submit_label(q.record_id, other), Err(Error::Conflict(_))));
        let outside = s.records().find(|r| r.genre.is_some()).unwrap().id;
        assert!(s.submit_label(outside, g).is_err());
        assert_ne!(s.next_query().unwrap().record_id, q.record_id);
    }

    #[test]
    fn rounds_preserve_totals_and_finish() {
        let (recs, truth) = corpus();
        let total = recs.len();
        let mut s = AnnotationSession::new(recs, config()).unwrap();
        let mut labeled = total - s.pool().len();
        let mut human_given = 9;
        for _ in 0..20 {
            if s.pool().is_empty() {
                break;
            }
            let labels: Vec<(u64, Genre)> = s.queue().iter().map(|id| (*id, truth[id])).collect();
            human_given += labels.len();
            let summary = s.run_round(&labels).unwrap();
            let now = total - s.pool().len();
            assert!(now >= labeled);
            assert_eq!(summary.pool_remaining, s.pool().len());
            labeled = now;
        }
        assert!(s.pool().is_empty());
        let m = s.metrics();
        assert_eq!(m.human, human_given);
        assert_eq!(m.human + m.machine, total);

        let before = s.round();
        let summary = s.run_round(&[]).unwrap();
        assert_eq!(summary.round, before + 1);
        assert_eq!(summary.queried, 0);
    }

    #[test]
    fn rounds_are_deterministic() {
        let run = || {
            let (recs, truth) = corpus();
            let mut s = AnnotationSession::new(recs, config()).unwrap();
            let mut queries = vec![s.queue().to_vec()];
            for _ in 0..3 {
                let labels: Vec<(u64, Genre)> = s.queue().iter().map(|id| (*id, truth[id])).collect();
                s.run_round(&labels).unwrap();
                queries.push(s.queue().to_vec());
            }
            queries
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn unknown_label_rejected_without_side_effects() {
        let (recs, _) = corpus();
        let mut s = AnnotationSession::new(recs, config()).unwrap();
        let queued = s.queue()[0];
        let err = s.run_round(&[(queued, Genre::Meal), (9999, Genre::Meal)]).unwrap_err();
        assert!(err.to_string().contains("9999"));
        assert_eq!(s.round(), 0);
        assert_eq!(s.metrics().answered, 0);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let (recs, truth) = corpus();
        let mut s = AnnotationSession::new(recs, config()).unwrap();
        let labels: Vec<(u64, Genre)> = s.queue().iter().map(|id| (*id, truth[id])).collect();
        s.run_round(&labels).unwrap();
        if let Some(q) = s.next_query() {
            s.submit_label(q.record_id, truth[&q.record_id]).unwrap();
        }
        let mut buf = Vec::new();
        s.write_checkpoint(&mut buf).unwrap();
        let back = AnnotationSession::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.round(), s.round());
        assert_eq!(back.queue(), s.queue());
        assert_eq!(back.pool(), s.pool());
        assert_eq!(back.metrics().answered, s.metrics().answered);
        assert_eq!(back.records().collect::<Vec<_>>(), s.records().collect::<Vec<_>>());
    }

    #[test]
    fn bad_config() {
        let (recs, _) = corpus();
        let cfg = SessionConfig { tau: 0.0, ..config() };
        assert!(AnnotationSession::new(recs.clone(), cfg).is_err());
        let cfg = SessionConfig { batch: 0, ..config() };
        assert!(AnnotationSession::new(recs, cfg).is_err());
    }
}
