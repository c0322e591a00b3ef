//! Cross-validated evaluation of selected feature sets.

mod folds;
mod forest;
mod sweep;

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

pub use folds::stratified_folds;
pub use forest::{train, ForestConfig, TreeEnsemble};
pub use sweep::{cross_validate, sweep, CvConfig, CvOutcome, EvalReport, LengthRow, MetricSummary};

/// Malware is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p);
        }
        cm
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::M, Label::M) => self.tp += 1,
            (Label::B, Label::B) => self.tn += 1,
            (Label::B, Label::M) => self.fp += 1,
            (Label::M, Label::B) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.tn += rhs.tn;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), |mut acc, cm| {
            acc += cm;
            acc
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub fpr: f64,
    /// `(TP/(TP+FP) + TN/(TN+FP)) / 2`, kept distinct from [`roc_auc`].
    pub paper_auc: f64,
    pub f1: f64,
}

/// `num / den`, with `0/0` (and any zero denominator) defined as 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let ConfusionMatrix { tp, tn, fp, fn_ } = *cm;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        accuracy: ratio(tp + tn, tp + fn_ + tn + fp),
        fpr: ratio(fp, fp + tn),
        paper_auc: 0.5 * (precision + ratio(tn, tn + fp)),
        f1,
    }
}

/// Probability that a random malware sample scores above a random benign
/// one, ties counting one half (rank-sum formulation).
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_m = labels.iter().filter(|&&l| l == Label::M).count();
    let n_b = labels.len() - n_m;
    if n_m == 0 || n_b == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_m = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // ranks are 1-based; tied run shares the mean rank
        let mid_rank = (start + end) as f64 / 2.0 + 1.0;
        rank_sum_m += mid_rank * order[start..=end].iter().filter(|&&i| labels[i] == Label::M).count() as f64;
        start = end + 1;
    }
    let n_m = n_m as f64;
    Ok((rank_sum_m - n_m * (n_m + 1.0) / 2.0) / (n_m * n_b as f64))
}
