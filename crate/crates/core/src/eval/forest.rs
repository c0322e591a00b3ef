//! Bagged CART ensemble with per-split feature subsampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    /// Nodes smaller than this become leaves.
    pub min_samples_split: usize,
    /// Features drawn per split; `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_depth: 16,
            min_samples_split: 2,
            features_per_split: None,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Config("trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::Config("features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    fn mtry(&self, d: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
            .clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Label),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> Label {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

fn majority(m: usize, b: usize) -> Label {
    if m > b {
        Label::M
    } else {
        Label::B
    }
}

fn gini(m: usize, b: usize) -> f64 {
    let n = (m + b) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (pm, pb) = (m as f64 / n, b as f64 / n);
    1.0 - pm * pm - pb * pb
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> (usize, usize) {
        let m = idx.iter().filter(|&&i| self.y[i] == Label::M).count();
        (m, idx.len() - m)
    }

    /// Lowest weighted child impurity over thresholds of one feature.
    fn best_threshold(&self, idx: &[usize], feature: usize) -> Option<Split> {
        let mut sorted: Vec<(f64, Label)> = idx.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let total_m = sorted.iter().filter(|p| p.1 == Label::M).count();
        let mut left_m = 0;
        let mut best: Option<Split> = None;
        for k in 1..n {
            if sorted[k - 1].1 == Label::M {
                left_m += 1;
            }
            if sorted[k].0 <= sorted[k - 1].0 {
                continue;
            }
            let left_b = k - left_m;
            let right_m = total_m - left_m;
            let right_b = (n - k) - right_m;
            let impurity = (k as f64 * gini(left_m, left_b) + (n - k) as f64 * gini(right_m, right_b)) / n as f64;
            if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                best = Some(Split {
                    feature,
                    threshold: 0.5 * (sorted[k - 1].0 + sorted[k].0),
                    impurity,
                });
            }
        }
        best
    }

    /// Examine `mtry` random features; keep drawing past `mtry` only while
    /// no examined feature admits any split.
    fn choose_split(&mut self, idx: &[usize]) -> Option<Split> {
        let mut features: Vec<usize> = (0..self.x[0].len()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<Split> = None;
        for (examined, &f) in features.iter().enumerate() {
            if examined >= self.mtry && best.is_some() {
                break;
            }
            if let Some(s) = self.best_threshold(idx, f) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (m, b) = self.counts(&idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(m, b)));
        if m == 0 || b == 0 || idx.len() < self.cfg.min_samples_split || depth >= self.cfg.max_depth {
            return at;
        }
        let Some(split) = self.choose_split(&idx) else {
            return at;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Trained ensemble; prediction is a majority vote with ties going to benign.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<Tree>,
    n_features: usize,
    pub config: ForestConfig,
}

pub fn train(x: &[Vec<f64>], y: &[Label], cfg: &ForestConfig) -> Result<TreeEnsemble> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::Format(format!("{} rows for {} labels", x.len(), y.len())));
    }
    if x.len() < 2 || !y.contains(&Label::M) || !y.contains(&Label::B) {
        return Err(Error::SingleClass);
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::ArityMismatch {
            expected: d,
            found: row.len(),
        });
    }
    let trees = (0..cfg.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(cfg.seed, &[seed::FOREST, t as u64]);
            let bootstrap: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
            let mut builder = Builder {
                x,
                y,
                cfg,
                mtry: cfg.mtry(d),
                rng,
                nodes: Vec::new(),
            };
            builder.build(bootstrap, 0);
            Tree { nodes: builder.nodes }
        })
        .collect();
    Ok(TreeEnsemble {
        trees,
        n_features: d,
        config: cfg.clone(),
    })
}

impl TreeEnsemble {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of trees voting malware.
    pub fn malware_votes(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        Ok(self.trees.iter().filter(|t| t.predict(row) == Label::M).count())
    }

    pub fn vote_fraction(&self, row: &[f64]) -> Result<f64> {
        Ok(self.malware_votes(row)? as f64 / self.trees.len() as f64)
    }

    pub fn predict(&self, row: &[f64]) -> Result<Label> {
        Ok(vote_label(self.malware_votes(row)?, self.trees.len()))
    }
}

/// Strict majority for malware; an exact tie is benign.
pub(crate) fn vote_label(malware_votes: usize, trees: usize) -> Label {
    if 2 * malware_votes > trees {
        Label::M
    } else {
        Label::B
    }
}
