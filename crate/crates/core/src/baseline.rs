//! Filter rankers: information gain, chi-square, symmetric uncertainty.
//!
//! Information gain and symmetric uncertainty read the four-bin values of
//! the decision table; chi-square reads the 2×2 presence/class contingency.
//! Entropies are in bits.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featurize::DecisionTable;
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ig,
    Chi,
    Su,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ig => "ig",
            Method::Chi => "chi",
            Method::Su => "su",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ig" => Ok(Method::Ig),
            "chi" => Ok(Method::Chi),
            "su" => Ok(Method::Su),
            other => Err(Error::Config(format!("unknown ranking method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub call: String,
    pub score: f64,
    #[serde(skip_serializing, default = "default_method")]
    pub method: Method,
}

fn default_method() -> Method {
    Method::Ig
}

/// Shannon entropy (bits) of a histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn label_slot(label: Label) -> usize {
    match label {
        Label::M => 0,
        Label::B => 1,
    }
}

/// bin × label contingency table for one call.
fn joint_counts(table: &DecisionTable, call: usize) -> [[usize; 2]; 4] {
    let mut joint = [[0usize; 2]; 4];
    for (i, &label) in table.labels().iter().enumerate() {
        joint[table.bin(i, call).index()][label_slot(label)] += 1;
    }
    joint
}

fn label_entropy(table: &DecisionTable) -> f64 {
    let mut counts = [0usize; 2];
    for &l in table.labels() {
        counts[label_slot(l)] += 1;
    }
    entropy(&counts)
}

fn bins_entropy(joint: &[[usize; 2]; 4]) -> f64 {
    entropy(&joint.map(|row| row[0] + row[1]))
}

/// `H(labels | bins)`.
fn conditional_entropy(joint: &[[usize; 2]; 4], n: usize) -> f64 {
    joint
        .iter()
        .map(|row| {
            let size = row[0] + row[1];
            size as f64 / n as f64 * entropy(row)
        })
        .sum()
}

fn lookup(table: &DecisionTable, call: &str) -> Result<usize> {
    table
        .call_index(call)
        .ok_or_else(|| Error::UnknownAttribute(call.to_string()))
}

fn ig_at(table: &DecisionTable, call: usize) -> f64 {
    let joint = joint_counts(table, call);
    (label_entropy(table) - conditional_entropy(&joint, table.n_samples())).max(0.0)
}

fn su_at(table: &DecisionTable, call: usize) -> f64 {
    let joint = joint_counts(table, call);
    let h_labels = label_entropy(table);
    let denom = bins_entropy(&joint) + h_labels;
    if denom <= 0.0 {
        return 0.0;
    }
    let ig = (h_labels - conditional_entropy(&joint, table.n_samples())).max(0.0);
    (2.0 * ig / denom).clamp(0.0, 1.0)
}

pub fn information_gain(table: &DecisionTable, call: &str) -> Result<f64> {
    Ok(ig_at(table, lookup(table, call)?))
}

pub fn symmetric_uncertainty(table: &DecisionTable, call: &str) -> Result<f64> {
    Ok(su_at(table, lookup(table, call)?))
}

/// `N (AD - CB)^2 / ((A+C)(B+D)(A+B)(C+D))`, with `A`/`B` the malware/benign
/// samples containing the call and `C`/`D` those lacking it. Any zero
/// marginal scores 0.
pub fn chi_square_counts(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let marginals = [a + c, b + d, a + b, c + d];
    if marginals.contains(&0) {
        return 0.0;
    }
    let n = (a + b + c + d) as f64;
    let diff = a as f64 * d as f64 - c as f64 * b as f64;
    n * diff * diff / marginals.iter().map(|&m| m as f64).product::<f64>()
}

fn presence_counts(table: &DecisionTable, call: usize) -> Result<[u64; 4]> {
    if !table.has_presence() {
        return Err(Error::Config(
            "chi-square needs a presence view; build the table from call counts".into(),
        ));
    }
    let mut abcd = [0u64; 4];
    for (i, &label) in table.labels().iter().enumerate() {
        let present = table.present(i, call).unwrap_or(false);
        let slot = match (present, label) {
            (true, Label::M) => 0,
            (true, Label::B) => 1,
            (false, Label::M) => 2,
            (false, Label::B) => 3,
        };
        abcd[slot] += 1;
    }
    Ok(abcd)
}

pub fn chi_square(table: &DecisionTable, call: &str) -> Result<f64> {
    let [a, b, c, d] = presence_counts(table, lookup(table, call)?)?;
    Ok(chi_square_counts(a, b, c, d))
}

pub fn score(table: &DecisionTable, call: usize, method: Method) -> Result<f64> {
    Ok(match method {
        Method::Ig => ig_at(table, call),
        Method::Su => su_at(table, call),
        Method::Chi => {
            let [a, b, c, d] = presence_counts(table, call)?;
            chi_square_counts(a, b, c, d)
        }
    })
}

/// Top `k` calls by descending score, ties broken by call name.
pub fn rank(table: &DecisionTable, method: Method, k: usize) -> Result<Vec<RankedFeature>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut scored = (0..table.n_calls())
        .into_par_iter()
        .map(|j| {
            score(table, j, method).map(|score| RankedFeature {
                call: table.calls()[j].clone(),
                score,
                method,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.call.cmp(&b.call)));
    scored.truncate(k);
    Ok(scored)
}
