//! One entry point over every selector, producing a ranked call list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{self, Method};
use crate::featurize::{discretize, FeatureVectorTable};
use crate::roughset::{generate_reduct, Reduct};
use crate::stat_filter::{filter_calls, FilterOutcome, ZTestConfig};
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    /// Rough-set reduct, then the z-test filter.
    Rsst,
    /// Rough-set reduct only.
    Roughset,
    Ig,
    Chi,
    Su,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Rsst => "rsst",
            Selector::Roughset => "roughset",
            Selector::Ig => "ig",
            Selector::Chi => "chi",
            Selector::Su => "su",
        }
    }

    /// What the ranking's scores are and how they order it.
    pub fn ordering(self) -> &'static str {
        match self {
            Selector::Rsst => "descending |z| over both dominant lists",
            Selector::Roughset => "reduct addition order, score is prefix significance",
            Selector::Ig => "descending information gain (bits)",
            Selector::Chi => "descending chi-square on call presence",
            Selector::Su => "descending symmetric uncertainty",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsst" => Ok(Selector::Rsst),
            "roughset" => Ok(Selector::Roughset),
            "ig" => Ok(Selector::Ig),
            "chi" => Ok(Selector::Chi),
            "su" => Ok(Selector::Su),
            other => Err(Error::Config(format!(
                "unknown method {other:?}, expected rsst, roughset, ig, chi or su"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCall {
    pub call: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: Selector,
    pub ordering: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduct: Option<Reduct>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterOutcome>,
    pub ranking: Vec<RankedCall>,
}

impl Selection {
    pub fn calls(&self) -> Vec<String> {
        self.ranking.iter().map(|r| r.call.clone()).collect()
    }
}

/// Run `selector` on `fvt`. The z-test reads its weights from `z_table`,
/// which must cover the same samples; pass `fvt` again to test on the
/// TF-IDF weights. `top_k` truncates the ranking.
pub fn select(
    fvt: &FeatureVectorTable,
    z_table: &FeatureVectorTable,
    selector: Selector,
    z_cfg: &ZTestConfig,
    top_k: Option<usize>,
) -> Result<Selection> {
    for class in Label::ALL {
        if !fvt.labels().contains(&class) {
            return Err(Error::SingleClass);
        }
    }
    if top_k == Some(0) {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    if z_table.samples() != fvt.samples() || z_table.labels() != fvt.labels() {
        return Err(Error::Config("z-test table does not match the feature table's samples".into()));
    }
    let table = discretize(fvt)?;
    let limit = top_k.unwrap_or(usize::MAX);
    let mut selection = Selection {
        method: selector,
        ordering: selector.ordering().to_string(),
        reduct: None,
        filter: None,
        ranking: Vec::new(),
    };
    let method = match selector {
        Selector::Rsst | Selector::Roughset => {
            let reduct = generate_reduct(&table)?;
            if selector == Selector::Rsst {
                let outcome = filter_calls(z_table, &reduct.calls(), z_cfg)?;
                selection.ranking = outcome
                    .merged()
                    .into_iter()
                    .map(|s| RankedCall { call: s.call, score: s.z })
                    .collect();
                selection.filter = Some(outcome);
            } else {
                selection.ranking = reduct
                    .steps
                    .iter()
                    .map(|s| RankedCall {
                        call: s.call.clone(),
                        score: s.significance,
                    })
                    .collect();
            }
            selection.ranking.truncate(limit);
            selection.reduct = Some(reduct);
            return Ok(selection);
        }
        Selector::Ig => Method::Ig,
        Selector::Chi => Method::Chi,
        Selector::Su => Method::Su,
    };
    let k = limit.min(table.n_calls());
    selection.ranking = baseline::rank(&table, method, k)?
        .into_iter()
        .map(|r| RankedCall {
            call: r.call,
            score: r.score,
        })
        .collect();
    Ok(selection)
}

/// `ranking` followed by the remaining calls of `vocabulary` in their
/// given order.
pub fn complete_ranking(ranking: &[String], vocabulary: &[String]) -> Vec<String> {
    let mut out = ranking.to_vec();
    out.extend(vocabulary.iter().filter(|c| !ranking.contains(c)).cloned());
    out
}
