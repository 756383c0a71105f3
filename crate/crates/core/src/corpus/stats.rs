use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Provenance, RecipeRecord};
use crate::genre::{Genre, GENRE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreCount {
    pub genre: Genre,
    pub human: u64,
    pub machine: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_genre: Vec<GenreCount>,
    pub unlabeled: u64,
    pub human_total: u64,
    pub machine_total: u64,
    pub labeled_total: u64,
    pub total: u64,
}

impl Default for CorpusStats {
    fn default() -> Self {
        CorpusStats {
            per_genre: Genre::ALL
                .iter()
                .map(|&genre| GenreCount {
                    genre,
                    human: 0,
                    machine: 0,
                    total: 0,
                })
                .collect(),
            unlabeled: 0,
            human_total: 0,
            machine_total: 0,
            labeled_total: 0,
            total: 0,
        }
    }
}

impl CorpusStats {
    pub fn add(&mut self, genre: Option<Genre>, provenance: Provenance, count: u64) {
        self.total += count;
        let Some(g) = genre else {
            self.unlabeled += count;
            return;
        };
        let slot = &mut self.per_genre[g.index()];
        slot.total += count;
        self.labeled_total += count;
        match provenance {
            Provenance::Machine => {
                slot.machine += count;
                self.machine_total += count;
            }
            _ => {
                slot.human += count;
                self.human_total += count;
            }
        }
    }

    pub fn genre(&self, g: Genre) -> &GenreCount {
        &self.per_genre[g.index()]
    }
}

pub fn corpus_stats(records: &[RecipeRecord]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for r in records {
        stats.add(r.genre, r.provenance, 1);
    }
    debug_assert_eq!(stats.per_genre.len(), GENRE_COUNT);
    stats
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>2}  {:<12} {:>10} {:>10} {:>10}",
            "id", "genre", "total", "human", "machine"
        )?;
        for c in &self.per_genre {
            writeln!(
                f,
                "{:>2}  {:<12} {:>10} {:>10} {:>10}",
                c.genre.id(),
                c.genre.name(),
                c.total,
                c.human,
                c.machine
            )?;
        }
        writeln!(
            f,
            "    {:<12} {:>10} {:>10} {:>10}",
            "labeled", self.labeled_total, self.human_total, self.machine_total
        )?;
        writeln!(f, "    {:<12} {:>10}", "unlabeled", self.unlabeled)?;
        write!(f, "    {:<12} {:>10}", "total", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::labeled;

    #[test]
    fn empty() {
        let s = corpus_stats(&[]);
        assert_eq!(s, CorpusStats::default());
        assert_eq!(s.total, 0);
    }

    #[test]
    fn one_per_genre() {
        let recs: Vec<_> = Genre::ALL
            .iter()
            .enumerate()
            .map(|(i, &g)| labeled(i as u64, g))
            .collect();
        let s = corpus_stats(&recs);
        for c in &s.per_genre {
            assert_eq!((c.total, c.human, c.machine), (1, 1, 0));
        }
        assert_eq!(s.total, 9);
    }

    #[test]
    fn published_table_counts() {
        // Human / machine columns per genre as published.
        let counts: [(u64, u64); 9] = [
            (28481, 132231),
            (45113, 308825),
            (40757, 275070),
            (56245, 342432),
            (31476, 145633),
            (45677, 294818),
            (7009, 46248),
            (37210, 301287),
            (8028, 84602),
        ];
        let mut s = CorpusStats::default();
        for (g, (h, m)) in Genre::ALL.iter().zip(counts) {
            s.add(Some(*g), Provenance::Human, h);
            s.add(Some(*g), Provenance::Machine, m);
        }
        assert_eq!(s.genre(Genre::Bakery).total, 160712);
        assert_eq!(s.genre(Genre::Meal).total, 53257);
        assert_eq!(s.human_total, 299996);
        assert_eq!(s.machine_total, 1931146);
        assert_eq!(s.total, 2231142);
    }
}
