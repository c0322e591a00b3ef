//! Feature selection over system-call traces.
//!
//! The pipeline runs ingest → featurize → select → evaluate:
//!
//! - [`trace`] parses strace-style logs into per-sample call counts.
//! - [`featurize`] builds the TF-IDF feature vector table, its four-bin
//!   decision table, and call-graph degree features.
//! - [`roughset`] computes indiscernibility partitions, positive regions and
//!   a greedy minimal reduct.
//! - [`stat_filter`] splits reduct survivors into malware- and
//!   benign-dominant lists with a two-sample z-test.
//! - [`baseline`] ranks calls by information gain, chi-square and symmetric
//!   uncertainty.
//! - [`select`] runs any of the selectors and returns one ranked list.
//! - [`eval`] runs stratified cross-validation with a bagged tree ensemble.
//! - [`oracle`] generates synthetic corpora with planted ground truth and
//!   brute-force reference implementations.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod oracle;
pub mod roughset;
pub mod seed;
pub mod select;
pub mod stat_filter;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{Method, RankedFeature};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvalReport, ForestConfig, Metrics, TreeEnsemble};
pub use featurize::{Bin, DecisionTable, FeatureVectorTable, FvtOptions, GraphFeatureRow, Weighting};
pub use oracle::{AnswerKey, SynthSpec};
pub use roughset::{Approximation, Partition, Reduct, Significance};
pub use select::{RankedCall, Selection, Selector};
pub use stat_filter::{ClassStats, Dominant, FilterOutcome, ZTestConfig, ZVerdict};
pub use trace::{CallCountRecord, LineKind, ParseSummary, TraceLine};

/// Decision attribute: malware or benign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    M,
    B,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::M, Label::B];

    pub fn other(self) -> Label {
        match self {
            Label::M => Label::B,
            Label::B => Label::M,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::M => "M",
            Label::B => "B",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(Label::M),
            "B" => Ok(Label::B),
            other => Err(Error::Format(format!("label must be M or B, got {other:?}"))),
        }
    }
}
