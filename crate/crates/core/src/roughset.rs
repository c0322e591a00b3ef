//! Rough-set attribute reduction over a binned decision table.
//!
//! Samples are indiscernible under an attribute set when they fall in the
//! same bin for every attribute in it. The positive region is the union of
//! label-pure indiscernibility blocks, and the significance (dependency
//! degree) of an attribute set is the fraction of samples in that region.
//! [`generate_reduct`] grows a reduct greedily from the single most
//! significant call and then prunes it to a minimal subset.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featurize::{Bin, DecisionTable};
use crate::{Error, Label, Result};

/// Equivalence classes of samples, each block sorted ascending and blocks
/// ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// The single block holding every sample (empty attribute set).
    pub fn universe(n: usize) -> Self {
        let blocks = if n == 0 { vec![] } else { vec![(0..n).collect()] };
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Split every block by the bin each member takes on `attr`.
    pub fn refine(&self, table: &DecisionTable, attr: usize) -> Partition {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let mut buckets: [Vec<usize>; 4] = Default::default();
            for &x in block {
                buckets[table.bin(x, attr).index()].push(x);
            }
            blocks.extend(buckets.into_iter().filter(|b| !b.is_empty()));
        }
        Partition { blocks }
    }

    fn canonical(mut self) -> Partition {
        self.blocks.sort_by_key(|b| b[0]);
        self
    }

    /// Number of samples lying in label-pure blocks.
    pub fn positive_count(&self, labels: &[Label]) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.iter().all(|&x| labels[x] == labels[b[0]]))
            .map(Vec::len)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approximation {
    pub lower: BTreeSet<usize>,
    pub upper: BTreeSet<usize>,
}

pub fn partition<S: AsRef<str>>(table: &DecisionTable, attrs: &[S]) -> Result<Partition> {
    Ok(partition_by_index(table, &table.indices_of(attrs)?))
}

pub fn partition_by_index(table: &DecisionTable, attrs: &[usize]) -> Partition {
    attrs
        .iter()
        .fold(Partition::universe(table.n_samples()), |p, &a| p.refine(table, a))
        .canonical()
}

pub fn approximate(part: &Partition, target: &BTreeSet<usize>) -> Approximation {
    let mut lower = BTreeSet::new();
    let mut upper = BTreeSet::new();
    for block in part.blocks() {
        let inside = block.iter().filter(|x| target.contains(x)).count();
        if inside == block.len() {
            lower.extend(block);
        }
        if inside > 0 {
            upper.extend(block);
        }
    }
    Approximation { lower, upper }
}

/// Samples whose decision class is determined with certainty by `attrs`:
/// the union over classes of each class's lower approximation.
pub fn positive_region<S: AsRef<str>>(table: &DecisionTable, attrs: &[S]) -> Result<BTreeSet<usize>> {
    let part = partition(table, attrs)?;
    let mut region = BTreeSet::new();
    for class in Label::ALL {
        let target: BTreeSet<usize> = (0..table.n_samples())
            .filter(|&i| table.labels()[i] == class)
            .collect();
        region.extend(approximate(&part, &target).lower);
    }
    Ok(region)
}

/// Exact dependency degree `|POS| / |U|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Significance {
    pub positive: usize,
    pub universe: usize,
}

impl Significance {
    pub fn value(&self) -> f64 {
        if self.universe == 0 {
            0.0
        } else {
            self.positive as f64 / self.universe as f64
        }
    }
}

impl PartialOrd for Significance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Significance {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.positive * other.universe).cmp(&(other.positive * self.universe))
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.positive, self.universe)
    }
}

pub fn significance<S: AsRef<str>>(table: &DecisionTable, attrs: &[S]) -> Result<Significance> {
    Ok(significance_by_index(table, &table.indices_of(attrs)?))
}

pub fn significance_by_index(table: &DecisionTable, attrs: &[usize]) -> Significance {
    Significance {
        positive: partition_by_index(table, attrs).positive_count(table.labels()),
        universe: table.n_samples(),
    }
}

fn check_reducible(table: &DecisionTable) -> Result<()> {
    if table.n_calls() == 0 {
        return Err(Error::Config("decision table has no attributes".into()));
    }
    for class in Label::ALL {
        if !table.labels().contains(&class) {
            return Err(Error::Config(format!("decision table has no samples of class {class}")));
        }
    }
    Ok(())
}

/// Highest-significance candidate refining `base`; ties go to the lowest
/// attribute index, i.e. the lexicographically smallest call.
fn best_extension(table: &DecisionTable, base: &Partition, candidates: &[usize]) -> Option<(usize, usize)> {
    let scored: Vec<(usize, usize)> = candidates
        .par_iter()
        .map(|&a| (a, base.refine(table, a).positive_count(table.labels())))
        .collect();
    scored
        .into_iter()
        .min_by(|(a1, p1), (a2, p2)| p2.cmp(p1).then(a1.cmp(a2)))
}

pub fn most_significant_call(table: &DecisionTable) -> Result<String> {
    if table.n_calls() == 0 {
        return Err(Error::Config("decision table has no attributes".into()));
    }
    let all: Vec<usize> = (0..table.n_calls()).collect();
    let (best, _) = best_extension(table, &Partition::universe(table.n_samples()), &all)
        .expect("non-empty candidate set");
    Ok(table.calls()[best].clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductStep {
    pub call: String,
    pub significance: f64,
    #[serde(skip)]
    pub exact: Significance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduct {
    pub steps: Vec<ReductStep>,
    pub final_significance: f64,
    pub removed_in_backward_pass: Vec<String>,
    #[serde(skip)]
    pub exact: Significance,
}

impl Reduct {
    pub fn calls(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.call.clone()).collect()
    }
}

/// Greedy forward selection followed by one backward minimality pass.
///
/// Forward: start from the most significant single call and keep adding
/// the call that maximizes significance of the grown set, even when no
/// candidate strictly improves it, until the set reaches the significance
/// of the full attribute set. Backward: in reverse addition order, drop any
/// call whose removal leaves significance unchanged.
pub fn generate_reduct(table: &DecisionTable) -> Result<Reduct> {
    check_reducible(table)?;
    let labels = table.labels();
    let universe = table.n_samples();
    let all: Vec<usize> = (0..table.n_calls()).collect();
    let target = significance_by_index(table, &all).positive;

    let mut chosen: Vec<usize> = Vec::new();
    let mut part = Partition::universe(universe);
    let mut positive = part.positive_count(labels);
    while chosen.len() < all.len() && (chosen.is_empty() || positive < target) {
        let candidates: Vec<usize> = all.iter().copied().filter(|a| !chosen.contains(a)).collect();
        let (best, _) = best_extension(table, &part, &candidates).expect("candidates remain");
        part = part.refine(table, best);
        positive = part.positive_count(labels);
        chosen.push(best);
    }

    let mut removed = Vec::new();
    for k in (0..chosen.len()).rev() {
        let mut without = chosen.clone();
        let e = without.remove(k);
        if significance_by_index(table, &without).positive == positive {
            chosen = without;
            removed.push(table.calls()[e].clone());
        }
    }

    let mut steps = Vec::with_capacity(chosen.len());
    let mut prefix = Partition::universe(universe);
    for &a in &chosen {
        prefix = prefix.refine(table, a);
        let exact = Significance {
            positive: prefix.positive_count(labels),
            universe,
        };
        steps.push(ReductStep {
            call: table.calls()[a].clone(),
            significance: exact.value(),
            exact,
        });
    }
    let exact = Significance { positive, universe };
    Ok(Reduct {
        steps,
        final_significance: exact.value(),
        removed_in_backward_pass: removed,
        exact,
    })
}

/// Sample labels and rows of the illustrative seven-sample table
/// (three calls, four bins), used by tests and the bundled fixture.
pub fn example_table() -> DecisionTable {
    use Bin::*;
    let rows = vec![
        (vec![B1, B4, B1], Label::B),
        (vec![B2, B1, B2], Label::M),
        (vec![B2, B1, B2], Label::M),
        (vec![B2, B2, B1], Label::B),
        (vec![B3, B2, B4], Label::M),
        (vec![B1, B2, B3], Label::B),
        (vec![B3, B2, B3], Label::M),
    ];
    DecisionTable::from_rows(
        (1..=7).map(|i| format!("x{i}")).collect(),
        vec!["s1".into(), "s2".into(), "s3".into()],
        rows.iter().map(|r| r.1).collect(),
        rows.into_iter().map(|r| r.0).collect(),
    )
    .expect("well-formed example")
}
