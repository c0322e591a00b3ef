//! Feature vector table construction.
//!
//! Each sample becomes a row of TF-IDF weights over the corpus call
//! vocabulary: `tf = count / total_calls`, `idf = ln(r / df)`, and each
//! column is min-max scaled to `[0, 1]` so the four fixed-width bins apply
//! to every call.

mod bins;
mod graph;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::trace::CallCountRecord;
use crate::{Error, Label, Result};

pub use bins::{discretize, Bin, DecisionTable};
pub use graph::{graph_features, graph_features_over, CallGraph, GraphFeatureRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Column-normalized TF-IDF.
    #[default]
    TfIdf,
    /// Raw relative frequency `count / total_calls`, unnormalized.
    RelFreq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FvtOptions {
    /// Calls present in fewer than `min_df` samples are dropped.
    pub min_df: usize,
    pub weighting: Weighting,
}

impl Default for FvtOptions {
    fn default() -> Self {
        FvtOptions {
            min_df: 1,
            weighting: Weighting::TfIdf,
        }
    }
}

/// Samples × calls matrix of weights in `[0, 1]` with class labels.
///
/// Columns are in lexicographic call order. Alongside the weights the table
/// keeps a presence bitmap (call occurred at least once in the sample),
/// which the chi-square ranking needs and which weights alone cannot
/// recover: a call present in every sample has idf 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVectorTable {
    samples: Vec<String>,
    calls: Vec<String>,
    labels: Vec<Label>,
    weights: Vec<f64>,
    presence: Vec<bool>,
}

fn check_corpus(labels: &[Label]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::Config(format!(
            "at least 2 samples required, got {}",
            labels.len()
        )));
    }
    for class in Label::ALL {
        if !labels.contains(&class) {
            return Err(Error::Config(format!("corpus has no samples of class {class}")));
        }
    }
    Ok(())
}

/// Min-max scale a column into `[0, 1]`; constant columns become all zeros.
pub fn normalize_column(column: &mut [f64]) {
    let (min, max) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = max - min;
    for v in column.iter_mut() {
        *v = if span > 0.0 {
            ((*v - min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}

pub fn build_fvt(records: &[CallCountRecord]) -> Result<FeatureVectorTable> {
    build_fvt_with(records, &FvtOptions::default())
}

pub fn build_fvt_with(records: &[CallCountRecord], opts: &FvtOptions) -> Result<FeatureVectorTable> {
    let labels: Vec<Label> = records.iter().map(|r| r.label).collect();
    check_corpus(&labels)?;

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for record in records {
        for name in record.counts().keys() {
            *df.entry(name.as_str()).or_insert(0) += 1;
        }
    }
    let min_df = opts.min_df.max(1);
    let vocabulary: Vec<(&str, usize)> = df.into_iter().filter(|&(_, d)| d >= min_df).collect();
    if vocabulary.is_empty() {
        return Err(Error::Config(format!(
            "empty vocabulary (no call reaches min_df = {min_df})"
        )));
    }

    let rows = records.len();
    let cols = vocabulary.len();
    let mut weights = vec![0.0; rows * cols];
    let mut presence = vec![false; rows * cols];
    let mut column = vec![0.0; rows];
    for (j, &(call, df)) in vocabulary.iter().enumerate() {
        let idf = (rows as f64 / df as f64).ln();
        for (i, record) in records.iter().enumerate() {
            let count = record.count(call);
            presence[i * cols + j] = count > 0;
            let tf = match record.total_calls() {
                0 => 0.0,
                total => count as f64 / total as f64,
            };
            column[i] = match opts.weighting {
                Weighting::TfIdf => tf * idf,
                Weighting::RelFreq => tf,
            };
        }
        if opts.weighting == Weighting::TfIdf {
            normalize_column(&mut column);
        }
        for (i, &w) in column.iter().enumerate() {
            weights[i * cols + j] = w;
        }
    }

    Ok(FeatureVectorTable {
        samples: records.iter().map(|r| r.sample_id.clone()).collect(),
        calls: vocabulary.iter().map(|&(c, _)| c.to_string()).collect(),
        labels,
        weights,
        presence,
    })
}

impl FeatureVectorTable {
    /// Assemble a table from row-major weights. Columns are reordered into
    /// lexicographic order; `presence` defaults to `weight > 0`.
    pub fn from_rows(
        samples: Vec<String>,
        calls: Vec<String>,
        labels: Vec<Label>,
        rows: Vec<Vec<f64>>,
        presence: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        let n = samples.len();
        if labels.len() != n || rows.len() != n {
            return Err(Error::Format(format!(
                "{n} samples but {} labels and {} rows",
                labels.len(),
                rows.len()
            )));
        }
        if let Some(p) = &presence {
            if p.len() != n || p.iter().any(|r| r.len() != calls.len()) {
                return Err(Error::Format("presence matrix shape mismatch".into()));
            }
        }
        let mut order: Vec<usize> = (0..calls.len()).collect();
        order.sort_by(|&a, &b| calls[a].cmp(&calls[b]));
        if order.windows(2).any(|w| calls[w[0]] == calls[w[1]]) {
            return Err(Error::Format("duplicate call column".into()));
        }
        let cols = calls.len();
        let mut weights = Vec::with_capacity(n * cols);
        let mut present = Vec::with_capacity(n * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Format(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            for &j in &order {
                let w = row[j];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::Format(format!(
                        "weight {w} for {}/{} outside [0, 1]",
                        samples[i], calls[j]
                    )));
                }
                weights.push(w);
                present.push(match &presence {
                    Some(p) => p[i][j],
                    None => w > 0.0,
                });
            }
        }
        Ok(FeatureVectorTable {
            samples,
            calls: order.iter().map(|&j| calls[j].clone()).collect(),
            labels,
            weights,
            presence: present,
        })
    }

    pub fn samples(&self) -> &[String] {
        &self.samples
    }

    pub fn calls(&self) -> &[String] {
        &self.calls
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_calls(&self) -> usize {
        self.calls.len()
    }

    pub fn call_index(&self, call: &str) -> Option<usize> {
        self.calls.binary_search_by(|c| c.as_str().cmp(call)).ok()
    }

    pub fn weight(&self, sample: usize, call: usize) -> f64 {
        self.weights[sample * self.calls.len() + call]
    }

    pub fn present(&self, sample: usize, call: usize) -> bool {
        self.presence[sample * self.calls.len() + call]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let n = self.calls.len();
        &self.weights[sample * n..(sample + 1) * n]
    }

    pub fn column(&self, call: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.weight(i, call)).collect()
    }

    /// Rows restricted to the given columns, in the given column order.
    pub fn project(&self, calls: &[usize]) -> Vec<Vec<f64>> {
        (0..self.n_samples())
            .map(|i| calls.iter().map(|&j| self.weight(i, j)).collect())
            .collect()
    }

    /// Resolve call names to column indices.
    pub fn indices_of<S: AsRef<str>>(&self, calls: &[S]) -> Result<Vec<usize>> {
        calls
            .iter()
            .map(|c| {
                self.call_index(c.as_ref())
                    .ok_or_else(|| Error::UnknownAttribute(c.as_ref().to_string()))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id"];
        header.extend(self.calls.iter().map(String::as_str));
        header.push("label");
        w.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut rec = vec![self.samples[i].clone()];
            rec.extend(self.row(i).iter().map(|v| format!("{v:.6}")));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the CSV layout written by [`FeatureVectorTable::write_csv`].
    /// Presence is taken to be `weight > 0`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (samples, calls, labels, cells) = read_labeled_csv(input)?;
        let rows = cells
            .into_iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| Error::Format(format!("not a number: {v:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureVectorTable::from_rows(samples, calls, labels, rows, None)
    }
}

type LabeledCells = (Vec<String>, Vec<String>, Vec<Label>, Vec<Vec<String>>);

/// Shared reader for the `sample_id,<calls...>,label` CSV layout.
pub(crate) fn read_labeled_csv<R: Read>(input: R) -> Result<LabeledCells> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "sample_id" || header[header.len() - 1] != "label" {
        return Err(Error::Format(
            "table header must be sample_id,<calls...>,label".into(),
        ));
    }
    let calls = header[1..header.len() - 1].to_vec();
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        samples.push(record[0].to_string());
        labels.push(record[record.len() - 1].parse()?);
        cells.push(record.iter().skip(1).take(calls.len()).map(str::to_string).collect());
    }
    Ok((samples, calls, labels, cells))
}
