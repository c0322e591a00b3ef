use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_labeled_csv, FeatureVectorTable};
use crate::{Error, Label, Result};

/// Quarter-width bin of a normalized weight.
///
/// `B1 = [0, 0.25]`, `B2 = (0.25, 0.5]`, `B3 = (0.5, 0.75]`, `B4 = (0.75, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bin {
    B1,
    B2,
    B3,
    B4,
}

impl Bin {
    pub const ALL: [Bin; 4] = [Bin::B1, Bin::B2, Bin::B3, Bin::B4];

    pub fn of(weight: f64) -> Result<Bin> {
        match weight {
            w if (0.0..=0.25).contains(&w) => Ok(Bin::B1),
            w if w > 0.25 && w <= 0.5 => Ok(Bin::B2),
            w if w > 0.5 && w <= 0.75 => Ok(Bin::B3),
            w if w > 0.75 && w <= 1.0 => Ok(Bin::B4),
            w => Err(Error::Invariant(format!("weight {w} outside [0, 1]"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Bin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.index() + 1)
    }
}

impl FromStr for Bin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Bin> {
        match s {
            "B1" => Ok(Bin::B1),
            "B2" => Ok(Bin::B2),
            "B3" => Ok(Bin::B3),
            "B4" => Ok(Bin::B4),
            other => Err(Error::Format(format!("not a bin: {other:?}"))),
        }
    }
}

/// Binned view of a feature vector table: conditional attributes are the
/// calls, the decision attribute is the label.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTable {
    samples: Vec<String>,
    calls: Vec<String>,
    labels: Vec<Label>,
    bins: Vec<Bin>,
    presence: Option<Vec<bool>>,
}

pub fn discretize(fvt: &FeatureVectorTable) -> Result<DecisionTable> {
    let mut bins = Vec::with_capacity(fvt.n_samples() * fvt.n_calls());
    let mut presence = Vec::with_capacity(bins.capacity());
    for i in 0..fvt.n_samples() {
        for j in 0..fvt.n_calls() {
            bins.push(Bin::of(fvt.weight(i, j))?);
            presence.push(fvt.present(i, j));
        }
    }
    Ok(DecisionTable {
        samples: fvt.samples().to_vec(),
        calls: fvt.calls().to_vec(),
        labels: fvt.labels().to_vec(),
        bins,
        presence: Some(presence),
    })
}

impl DecisionTable {
    /// Build a table directly from bin rows (no presence view).
    ///
    /// Calls may be given in any order; columns are stored in lexicographic
    /// order so attribute index order doubles as the tie-break order.
    pub fn from_rows(
        samples: Vec<String>,
        calls: Vec<String>,
        labels: Vec<Label>,
        rows: Vec<Vec<Bin>>,
    ) -> Result<Self> {
        let n = samples.len();
        if labels.len() != n || rows.len() != n {
            return Err(Error::Format(format!(
                "{n} samples but {} labels and {} rows",
                labels.len(),
                rows.len()
            )));
        }
        let mut order: Vec<usize> = (0..calls.len()).collect();
        order.sort_by(|&a, &b| calls[a].cmp(&calls[b]));
        if order.windows(2).any(|w| calls[w[0]] == calls[w[1]]) {
            return Err(Error::Format("duplicate call column".into()));
        }
        let mut bins = Vec::with_capacity(n * calls.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != calls.len() {
                return Err(Error::Format(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    calls.len()
                )));
            }
            bins.extend(order.iter().map(|&j| row[j]));
        }
        Ok(DecisionTable {
            samples,
            calls: order.iter().map(|&j| calls[j].clone()).collect(),
            labels,
            bins,
            presence: None,
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

    pub fn bin(&self, sample: usize, call: usize) -> Bin {
        self.bins[sample * self.calls.len() + call]
    }

    pub fn row(&self, sample: usize) -> &[Bin] {
        let n = self.calls.len();
        &self.bins[sample * n..(sample + 1) * n]
    }

    /// Presence of the call in the sample's raw counts, if known.
    pub fn present(&self, sample: usize, call: usize) -> Option<bool> {
        self.presence
            .as_ref()
            .map(|p| p[sample * self.calls.len() + call])
    }

    pub fn has_presence(&self) -> bool {
        self.presence.is_some()
    }

    pub fn call_index(&self, call: &str) -> Option<usize> {
        self.calls.binary_search_by(|c| c.as_str().cmp(call)).ok()
    }

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
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.calls.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut rec = vec![self.samples[i].clone()];
            rec.extend(self.row(i).iter().map(Bin::to_string));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (samples, calls, labels, cells) = read_labeled_csv(input)?;
        let rows = cells
            .iter()
            .map(|row| row.iter().map(|v| v.parse()).collect::<Result<Vec<Bin>>>())
            .collect::<Result<Vec<_>>>()?;
        DecisionTable::from_rows(samples, calls, labels, rows)
    }
}
