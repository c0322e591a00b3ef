use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Weighted directed graph of adjacent call pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    edges: BTreeMap<(String, String), u64>,
}

impl CallGraph {
    pub fn from_sequence<S: AsRef<str>>(sequence: &[S]) -> Self {
        let mut edges = BTreeMap::new();
        for pair in sequence.windows(2) {
            let key = (pair[0].as_ref().to_string(), pair[1].as_ref().to_string());
            *edges.entry(key).or_insert(0) += 1;
        }
        CallGraph { edges }
    }

    pub fn edge_weight(&self, from: &str, to: &str) -> u64 {
        self.edges
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges.iter().map(|((a, b), &w)| (a.as_str(), b.as_str(), w))
    }

    pub fn out_degree(&self, call: &str) -> u64 {
        self.edges().filter(|(a, _, _)| *a == call).map(|(_, _, w)| w).sum()
    }

    pub fn in_degree(&self, call: &str) -> u64 {
        self.edges().filter(|(_, b, _)| *b == call).map(|(_, _, w)| w).sum()
    }
}

/// Degree statistics of one sample's call graph over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureRow {
    pub sample_id: String,
    pub in_degree_mean: f64,
    pub in_degree_std: f64,
    pub out_degree_mean: f64,
    pub out_degree_std: f64,
    pub vocabulary: Vec<String>,
    pub in_degrees: Vec<u64>,
    pub out_degrees: Vec<u64>,
}

fn mean_std(values: &[u64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<u64>() as f64 / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Graph features over the sequence's own call set.
pub fn graph_features<S: AsRef<str>>(sample_id: &str, sequence: &[S]) -> GraphFeatureRow {
    let vocabulary: Vec<String> = sequence
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    graph_features_over(sample_id, sequence, &vocabulary)
}

/// Graph features with degree vectors aligned to a global vocabulary.
/// Edges touching calls outside the vocabulary are not reported.
pub fn graph_features_over<S: AsRef<str>>(
    sample_id: &str,
    sequence: &[S],
    vocabulary: &[String],
) -> GraphFeatureRow {
    let index: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut in_degrees = vec![0u64; vocabulary.len()];
    let mut out_degrees = vec![0u64; vocabulary.len()];
    for (from, to, w) in CallGraph::from_sequence(sequence).edges() {
        if let Some(&i) = index.get(from) {
            out_degrees[i] += w;
        }
        if let Some(&j) = index.get(to) {
            in_degrees[j] += w;
        }
    }
    let (in_degree_mean, in_degree_std) = mean_std(&in_degrees);
    let (out_degree_mean, out_degree_std) = mean_std(&out_degrees);
    GraphFeatureRow {
        sample_id: sample_id.to_string(),
        in_degree_mean,
        in_degree_std,
        out_degree_mean,
        out_degree_std,
        vocabulary: vocabulary.to_vec(),
        in_degrees,
        out_degrees,
    }
}
