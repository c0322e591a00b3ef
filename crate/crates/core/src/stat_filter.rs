//! Two-sample large-population z-test on per-class mean weights.
//!
//! For each candidate call the test compares the malware and benign means
//! of its weight column,
//!
//! ```text
//! z = (mean_M - mean_B) / sqrt(var_M / |M| + var_B / |B|)
//! ```
//!
//! and keeps the call when `|z|` strictly exceeds the critical value. Calls
//! with `z > 0` are malware-dominant, `z < 0` benign-dominant.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::featurize::FeatureVectorTable;
use crate::{Error, Label, Result};

pub const DEFAULT_Z_CRIT: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub call: String,
    pub mean_m: f64,
    pub mean_b: f64,
    pub var_m: f64,
    pub var_b: f64,
    pub n_m: usize,
    pub n_b: usize,
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Per-class mean and population variance of one call's weight column.
pub fn class_stats(fvt: &FeatureVectorTable, call: &str) -> Result<ClassStats> {
    let j = fvt
        .call_index(call)
        .ok_or_else(|| Error::UnknownAttribute(call.to_string()))?;
    let split = |class: Label| -> Result<Vec<f64>> {
        let values: Vec<f64> = (0..fvt.n_samples())
            .filter(|&i| fvt.labels()[i] == class)
            .map(|i| fvt.weight(i, j))
            .collect();
        if values.len() < 2 {
            return Err(Error::ClassTooSmall {
                class,
                found: values.len(),
                required: 2,
            });
        }
        Ok(values)
    };
    let m = split(Label::M)?;
    let b = split(Label::B)?;
    let (mean_m, var_m) = mean_var(&m);
    let (mean_b, var_b) = mean_var(&b);
    Ok(ClassStats {
        call: call.to_string(),
        mean_m,
        mean_b,
        var_m,
        var_b,
        n_m: m.len(),
        n_b: b.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZTestConfig {
    pub z_crit: f64,
    /// Use the standard deviation where the variance belongs in the
    /// standard error, reproducing the formula as sometimes printed.
    #[serde(default)]
    pub sigma_as_stddev: bool,
}

impl Default for ZTestConfig {
    fn default() -> Self {
        ZTestConfig {
            z_crit: DEFAULT_Z_CRIT,
            sigma_as_stddev: false,
        }
    }
}

/// Two-tailed standard-normal critical value for significance level `alpha`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// `None` when the pooled standard error is zero.
pub fn z_score(stats: &ClassStats) -> Option<f64> {
    z_score_with(stats, false)
}

pub fn z_score_with(stats: &ClassStats, sigma_as_stddev: bool) -> Option<f64> {
    let spread = |v: f64| if sigma_as_stddev { v.sqrt() } else { v };
    let se2 = spread(stats.var_m) / stats.n_m as f64 + spread(stats.var_b) / stats.n_b as f64;
    if se2 > 0.0 && se2.is_finite() {
        Some((stats.mean_m - stats.mean_b) / se2.sqrt())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominant {
    M,
    B,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZVerdict {
    pub call: String,
    /// `None` for a degenerate (zero standard error) column.
    pub z: Option<f64>,
    pub dominant: Dominant,
}

impl ZVerdict {
    pub fn new(call: String, z: Option<f64>, z_crit: f64) -> Self {
        let dominant = match z {
            Some(z) if z.abs() > z_crit && z > 0.0 => Dominant::M,
            Some(z) if z.abs() > z_crit => Dominant::B,
            _ => Dominant::None,
        };
        ZVerdict { call, z, dominant }
    }

    pub fn rejected_null(&self) -> bool {
        self.dominant != Dominant::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCall {
    pub call: String,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub verdicts: Vec<ZVerdict>,
    pub malware: Vec<ScoredCall>,
    pub benign: Vec<ScoredCall>,
}

fn by_magnitude(a: &ScoredCall, b: &ScoredCall) -> Ordering {
    b.z.abs()
        .total_cmp(&a.z.abs())
        .then_with(|| a.call.cmp(&b.call))
}

impl FilterOutcome {
    /// Both lists interleaved by descending `|z|`.
    pub fn merged(&self) -> Vec<ScoredCall> {
        let mut all: Vec<ScoredCall> = self.malware.iter().chain(&self.benign).cloned().collect();
        all.sort_by(by_magnitude);
        all
    }

    pub fn is_empty(&self) -> bool {
        self.malware.is_empty() && self.benign.is_empty()
    }
}

pub fn filter_calls<S: AsRef<str>>(
    fvt: &FeatureVectorTable,
    candidates: &[S],
    cfg: &ZTestConfig,
) -> Result<FilterOutcome> {
    let mut seen = HashSet::new();
    let mut verdicts = Vec::new();
    for call in candidates.iter().map(AsRef::as_ref) {
        if !seen.insert(call) {
            continue;
        }
        let stats = class_stats(fvt, call)?;
        let z = z_score_with(&stats, cfg.sigma_as_stddev);
        verdicts.push(ZVerdict::new(call.to_string(), z, cfg.z_crit));
    }
    let mut malware = Vec::new();
    let mut benign = Vec::new();
    for v in &verdicts {
        let scored = ScoredCall {
            call: v.call.clone(),
            z: v.z.unwrap_or(0.0),
        };
        match v.dominant {
            Dominant::M => malware.push(scored),
            Dominant::B => benign.push(scored),
            Dominant::None => {}
        }
    }
    malware.sort_by(by_magnitude);
    benign.sort_by(by_magnitude);
    Ok(FilterOutcome {
        verdicts,
        malware,
        benign,
    })
}
