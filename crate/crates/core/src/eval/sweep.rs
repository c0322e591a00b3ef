use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{train, vote_label, ForestConfig};
use super::{metrics, roc_auc, stratified_folds, ConfusionMatrix};
use crate::featurize::FeatureVectorTable;
use crate::{seed, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    /// `forest.seed` is the master seed: fold assignment and each fold's
    /// forest draw derived seeds from it.
    pub forest: ForestConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub fold_matrices: Vec<ConfusionMatrix>,
    /// Out-of-fold malware vote fraction for every sample.
    pub scores: Vec<f64>,
    pub predictions: Vec<Label>,
    pub train_time: Duration,
}

pub fn cross_validate(x: &[Vec<f64>], y: &[Label], cfg: &CvConfig) -> Result<CvOutcome> {
    let folds = stratified_folds(y, cfg.folds, cfg.forest.seed)?;
    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; y.len()];
            for &i in test {
                in_test[i] = true;
            }
            let train_idx: Vec<usize> = (0..y.len()).filter(|&i| !in_test[i]).collect();
            let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
            let forest_cfg = ForestConfig {
                seed: seed::derive(cfg.forest.seed, &[seed::FOREST, f as u64]),
                ..cfg.forest.clone()
            };
            let started = Instant::now();
            let model = train(&tx, &ty, &forest_cfg)?;
            let elapsed = started.elapsed();
            let mut cm = ConfusionMatrix::default();
            let mut scored = Vec::with_capacity(test.len());
            for &i in test {
                let votes = model.malware_votes(&x[i])?;
                let predicted = vote_label(votes, model.n_trees());
                cm.record(y[i], predicted);
                scored.push((i, votes as f64 / model.n_trees() as f64, predicted));
            }
            Ok((cm, scored, elapsed))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = vec![0.0; y.len()];
    let mut predictions = vec![Label::B; y.len()];
    let mut fold_matrices = Vec::with_capacity(per_fold.len());
    let mut train_time = Duration::ZERO;
    for (cm, scored, elapsed) in per_fold {
        fold_matrices.push(cm);
        train_time += elapsed;
        for (i, s, p) in scored {
            scores[i] = s;
            predictions[i] = p;
        }
    }
    Ok(CvOutcome {
        fold_matrices,
        scores,
        predictions,
        train_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub length: usize,
    pub acc: f64,
    pub fpr: f64,
    pub paper_auc: f64,
    pub roc_auc: f64,
    pub f1: f64,
    pub folds: Vec<ConfusionMatrix>,
    /// Summed forest training time; excluded from the report so that equal
    /// inputs serialize to equal bytes.
    #[serde(skip)]
    pub train_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub acc: f64,
    pub fpr: f64,
    pub paper_auc: f64,
    pub roc_auc: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub lengths: Vec<LengthRow>,
    pub average: MetricSummary,
    pub std_dev: MetricSummary,
}

fn summarize(rows: &[LengthRow]) -> (MetricSummary, MetricSummary) {
    let n = rows.len() as f64;
    let column = |f: fn(&LengthRow) -> f64| -> (f64, f64) {
        let mean = rows.iter().map(f).sum::<f64>() / n;
        let var = rows.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let acc = column(|r| r.acc);
    let fpr = column(|r| r.fpr);
    let paper_auc = column(|r| r.paper_auc);
    let roc = column(|r| r.roc_auc);
    let f1 = column(|r| r.f1);
    (
        MetricSummary {
            acc: acc.0,
            fpr: fpr.0,
            paper_auc: paper_auc.0,
            roc_auc: roc.0,
            f1: f1.0,
        },
        MetricSummary {
            acc: acc.1,
            fpr: fpr.1,
            paper_auc: paper_auc.1,
            roc_auc: roc.1,
            f1: f1.1,
        },
    )
}

/// Evaluate the top-`length` prefix of `ranking` for every requested length.
///
/// Metrics come from the fold confusion matrices summed (micro-averaged);
/// ROC AUC uses the pooled out-of-fold vote fractions.
pub fn sweep<S: AsRef<str>>(
    fvt: &FeatureVectorTable,
    ranking: &[S],
    lengths: &[usize],
    cfg: &CvConfig,
) -> Result<EvalReport> {
    if lengths.is_empty() {
        return Err(Error::Config("no feature lengths requested".into()));
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) || lengths[0] == 0 {
        return Err(Error::Config(format!(
            "lengths must be positive and strictly ascending, got {lengths:?}"
        )));
    }
    let last = *lengths.last().unwrap();
    if last > ranking.len() {
        return Err(Error::LengthExceedsRanking {
            requested: last,
            available: ranking.len(),
        });
    }
    let columns = fvt.indices_of(ranking)?;
    let mut rows = Vec::with_capacity(lengths.len());
    for &length in lengths {
        let x = fvt.project(&columns[..length]);
        let outcome = cross_validate(&x, fvt.labels(), cfg)?;
        let total: ConfusionMatrix = outcome.fold_matrices.iter().copied().sum();
        let m = metrics(&total);
        rows.push(LengthRow {
            length,
            acc: m.accuracy,
            fpr: m.fpr,
            paper_auc: m.paper_auc,
            roc_auc: roc_auc(&outcome.scores, fvt.labels())?,
            f1: m.f1,
            folds: outcome.fold_matrices,
            train_time: outcome.train_time,
        });
    }
    let (average, std_dev) = summarize(&rows);
    Ok(EvalReport {
        lengths: rows,
        average,
        std_dev,
    })
}

impl EvalReport {
    /// Table layout: one line per length, then average and std-deviation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature_length", "acc", "fpr", "paper_auc", "roc_auc", "f1"])?;
        let fmt = |v: f64| format!("{v:.6}");
        for r in &self.lengths {
            w.write_record([
                r.length.to_string(),
                fmt(r.acc),
                fmt(r.fpr),
                fmt(r.paper_auc),
                fmt(r.roc_auc),
                fmt(r.f1),
            ])?;
        }
        for (name, s) in [("average", &self.average), ("std_dev", &self.std_dev)] {
            w.write_record([
                name.to_string(),
                fmt(s.acc),
                fmt(s.fpr),
                fmt(s.paper_auc),
                fmt(s.roc_auc),
                fmt(s.f1),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
