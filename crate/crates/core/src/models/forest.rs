use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, VectorSet};
use crate::error::{Error, Result};
use crate::features::CountVector;
use crate::genre::GENRE_COUNT;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` means the square root of the
    /// number of features present in the node.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 50,
            max_depth: 12,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    /// Samples with `count ≤ threshold` go left.
    Split {
        feature: u32,
        threshold: u32,
        left: u32,
        right: u32,
    },
    Leaf {
        hist: [u32; GENRE_COUNT],
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    dim: usize,
    trees: Vec<Tree>,
}

fn gini_weighted(hist: &[u32; GENRE_COUNT], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let sq: f64 = hist.iter().map(|&c| (c as f64) * (c as f64)).sum();
    n - sq / n
}

struct Builder<'a> {
    data: &'a VectorSet,
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn build(&mut self, samples: &[usize], depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let mut hist = [0u32; GENRE_COUNT];
        for &s in samples {
            hist[self.data.labels[s].index()] += 1;
        }
        self.nodes.push(Node::Leaf { hist });
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || samples.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&s| self.data.vectors[s].get(feature) <= threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<(u32, u32)> {
        let present: BTreeSet<u32> = samples
            .iter()
            .flat_map(|&s| self.data.vectors[s].entries().iter().map(|&(i, _)| i))
            .collect();
        let present: Vec<u32> = present.into_iter().collect();
        let take = self
            .cfg
            .max_features
            .unwrap_or_else(|| (present.len() as f64).sqrt().ceil() as usize)
            .clamp(1, present.len().max(1));
        let candidates: Vec<u32> = if take < present.len() {
            let mut picked: Vec<u32> = sample(&mut self.rng, present.len(), take)
                .into_iter()
                .map(|k| present[k])
                .collect();
            picked.sort_unstable();
            picked
        } else {
            present
        };

        let mut best: Option<(f64, u32, u32)> = None;
        let n = samples.len() as u32;
        let mut total = [0u32; GENRE_COUNT];
        for &s in samples {
            total[self.data.labels[s].index()] += 1;
        }
        let mut pairs: Vec<(u32, usize)> = Vec::with_capacity(samples.len());
        for f in candidates {
            pairs.clear();
            pairs.extend(
                samples
                    .iter()
                    .map(|&s| (self.data.vectors[s].get(f), self.data.labels[s].index())),
            );
            pairs.sort_unstable();
            let mut left = [0u32; GENRE_COUNT];
            let mut nl = 0u32;
            for k in 0..pairs.len() - 1 {
                left[pairs[k].1] += 1;
                nl += 1;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let mut right = total;
                for c in 0..GENRE_COUNT {
                    right[c] -= left[c];
                }
                let impurity = gini_weighted(&left, nl) + gini_weighted(&right, n - nl);
                if best.is_none_or(|(b, _, _)| impurity < b - 1e-12) {
                    best = Some((impurity, f, pairs[k].0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl ForestModel {
    pub fn train(data: &VectorSet, cfg: &ForestConfig) -> Result<ForestModel> {
        if data.is_empty() {
            return Err(Error::validation("cannot train a forest on an empty set"));
        }
        if cfg.trees == 0 {
            return Err(Error::validation("forest needs at least one tree"));
        }
        let n = data.len();
        let trees = (0..cfg.trees)
            .into_par_iter()
            .map(|t| {
                let samples: Vec<usize> = if cfg.bootstrap {
                    let mut rng = stream(cfg.seed, Domain::Bootstrap, t as u64);
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    data,
                    cfg,
                    rng: stream(cfg.seed, Domain::Features, t as u64),
                    nodes: Vec::new(),
                };
                b.build(&samples, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(ForestModel { dim: data.dim, trees })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Leaf histograms of every tree, in node order.
    pub fn leaf_histograms(&self) -> Vec<Vec<[u32; GENRE_COUNT]>> {
        self.trees
            .iter()
            .map(|t| {
                t.nodes
                    .iter()
                    .filter_map(|n| match n {
                        Node::Leaf { hist } => Some(*hist),
                        Node::Split { .. } => None,
                    })
                    .collect()
            })
            .collect()
    }

    pub fn predict_proba(&self, v: &CountVector) -> Result<Vec<f64>> {
        check_dim(v, self.dim)?;
        let mut out = vec![0.0; GENRE_COUNT];
        for t in &self.trees {
            let mut at = 0usize;
            let hist = loop {
                match &t.nodes[at] {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => at = if v.get(*feature) <= *threshold { *left } else { *right } as usize,
                    Node::Leaf { hist } => break hist,
                }
            };
            let total: u32 = hist.iter().sum();
            for (o, &c) in out.iter_mut().zip(hist) {
                *o += c as f64 / total as f64;
            }
        }
        let k = self.trees.len() as f64;
        for o in &mut out {
            *o /= k;
        }
        Ok(out)
    }

    const NODE_WIDTH: usize = 5 + GENRE_COUNT;

    pub(crate) fn to_parts(&self) -> (Vec<u64>, Vec<f64>) {
        let mut shape = vec![self.trees.len() as u64];
        shape.extend(self.trees.iter().map(|t| t.nodes.len() as u64));
        let mut params = Vec::new();
        for t in &self.trees {
            for n in &t.nodes {
                match n {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        params.extend([0.0, *feature as f64, *threshold as f64, *left as f64, *right as f64]);
                        params.extend([0.0; GENRE_COUNT]);
                    }
                    Node::Leaf { hist } => {
                        params.extend([1.0, 0.0, 0.0, 0.0, 0.0]);
                        params.extend(hist.iter().map(|&c| c as f64));
                    }
                }
            }
        }
        (shape, params)
    }

    pub(crate) fn from_parts(dim: usize, shape: &[u64], params: &[f64]) -> Result<ForestModel> {
        let bad = |m: &str| Error::ModelFile(format!("forest: {m}"));
        let Some((&count, sizes)) = shape.split_first() else {
            return Err(bad("empty shape"));
        };
        if sizes.len() as u64 != count || count == 0 {
            return Err(bad("tree count does not match shape"));
        }
        let total: u64 = sizes.iter().sum();
        if params.len() as u64 != total * Self::NODE_WIDTH as u64 {
            return Err(bad("parameter count does not match node count"));
        }
        let mut chunks = params.chunks_exact(Self::NODE_WIDTH);
        let mut trees = Vec::with_capacity(sizes.len());
        for &size in sizes {
            let mut nodes = Vec::with_capacity(size as usize);
            for _ in 0..size {
                let c = chunks.next().expect("length checked");
                if c[0] == 1.0 {
                    let mut hist = [0u32; GENRE_COUNT];
                    for (h, v) in hist.iter_mut().zip(&c[5..]) {
                        *h = *v as u32;
                    }
                    if hist.iter().all(|&h| h == 0) {
                        return Err(bad("empty leaf"));
                    }
                    nodes.push(Node::Leaf { hist });
                } else {
                    let (l, r) = (c[3] as u64, c[4] as u64);
                    if l >= size || r >= size || c[1] as usize >= dim {
                        return Err(bad("split refers outside the tree or vocabulary"));
                    }
                    nodes.push(Node::Split {
                        feature: c[1] as u32,
                        threshold: c[2] as u32,
                        left: l as u32,
                        right: r as u32,
                    });
                }
            }
            trees.push(Tree { nodes });
        }
        Ok(ForestModel { dim, trees })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genre::Genre;
    use crate::models::predict_genre;

    fn cv(pairs: &[(u32, u32)]) -> CountVector {
        CountVector::from_pairs(pairs.iter().copied())
    }

    fn train_acc(m: &ForestModel, d: &VectorSet) -> f64 {
        let hits = d
            .vectors
            .iter()
            .zip(&d.labels)
            .filter(|(v, g)| predict_genre(&m.predict_proba(v).unwrap()).unwrap() == **g)
            .count();
        hits as f64 / d.len() as f64
    }

    #[test]
    fn stump_splits_single_feature() {
        let d = VectorSet::with_reserved(
            vec![cv(&[]), cv(&[(0, 1)]), cv(&[]), cv(&[(0, 2)])],
            vec![Genre::Bakery, Genre::Drinks, Genre::Bakery, Genre::Drinks],
            1,
            0,
        )
        .unwrap();
        let cfg = ForestConfig {
            trees: 1,
            max_depth: 1,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let m = ForestModel::train(&d, &cfg).unwrap();
        assert_eq!(train_acc(&m, &d), 1.0);
    }

    #[test]
    fn full_depth_memorizes_xor() {
        // Needs a zero-gain first split.
        let d = VectorSet::with_reserved(
            vec![cv(&[]), cv(&[(0, 1), (1, 1)]), cv(&[(0, 1)]), cv(&[(1, 1)])],
            vec![Genre::Bakery, Genre::Bakery, Genre::Drinks, Genre::Drinks],
            2,
            0,
        )
        .unwrap();
        let cfg = ForestConfig {
            trees: 1,
            max_depth: usize::MAX,
            max_features: Some(usize::MAX),
            bootstrap: false,
            seed: 0,
        };
        let m = ForestModel::train(&d, &cfg).unwrap();
        assert_eq!(train_acc(&m, &d), 1.0);
    }

    #[test]
    fn leaves_account_for_every_sample() {
        let vectors: Vec<_> = (0..30u32).map(|k| cv(&[(k % 5, k % 3 + 1), (5 + k % 4, 1)])).collect();
        let labels: Vec<_> = (0..30).map(|k| Genre::ALL[k % 4]).collect();
        let d = VectorSet::with_reserved(vectors, labels, 9, 0).unwrap();
        let m = ForestModel::train(
            &d,
            &ForestConfig {
                trees: 5,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        for leaves in m.leaf_histograms() {
            let n: u32 = leaves.iter().flat_map(|h| h.iter()).sum();
            assert_eq!(n, 30);
        }
        let p = m.predict_proba(&d.vectors[0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let again = ForestModel::train(
            &d,
            &ForestConfig {
                trees: 5,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        assert_eq!(m, again);
        let (shape, params) = m.to_parts();
        assert_eq!(ForestModel::from_parts(9, &shape, &params).unwrap(), m);
    }
}
