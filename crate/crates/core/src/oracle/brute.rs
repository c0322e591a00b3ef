use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::featurize::{Bin, DecisionTable};
use crate::roughset::{generate_reduct, positive_region, Significance};
use crate::{seed, Error, Label, Result};

/// Largest attribute count [`exhaustive_reduct`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 15;

/// Pairwise definition: `x` is in the region iff no sample with another
/// label agrees with `x` on every attribute in `attrs`.
pub fn naive_positive_region_by_index(table: &DecisionTable, attrs: &[usize]) -> BTreeSet<usize> {
    let n = table.n_samples();
    let labels = table.labels();
    (0..n)
        .filter(|&x| {
            !(0..n).any(|y| labels[y] != labels[x] && attrs.iter().all(|&a| table.bin(x, a) == table.bin(y, a)))
        })
        .collect()
}

pub fn naive_positive_region<S: AsRef<str>>(table: &DecisionTable, attrs: &[S]) -> Result<BTreeSet<usize>> {
    Ok(naive_positive_region_by_index(table, &table.indices_of(attrs)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveReduct {
    pub best_significance: f64,
    #[serde(skip)]
    pub best: Significance,
    /// Every minimum-cardinality attribute subset reaching the best
    /// significance, in lexicographic order.
    pub witnesses: Vec<Vec<String>>,
}

fn positive_count_by_grouping(table: &DecisionTable, attrs: &[usize]) -> usize {
    let mut groups: HashMap<Vec<Bin>, [usize; 2]> = HashMap::new();
    for i in 0..table.n_samples() {
        let key: Vec<Bin> = attrs.iter().map(|&a| table.bin(i, a)).collect();
        let slot = usize::from(table.labels()[i] == Label::B);
        groups.entry(key).or_default()[slot] += 1;
    }
    groups
        .values()
        .filter(|[m, b]| *m == 0 || *b == 0)
        .map(|[m, b]| m + b)
        .sum()
}

/// Enumerate all `2^n` attribute subsets.
pub fn exhaustive_reduct(table: &DecisionTable) -> Result<ExhaustiveReduct> {
    let n = table.n_calls();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Config(format!(
            "exhaustive search is limited to {EXHAUSTIVE_LIMIT} attributes, table has {n}"
        )));
    }
    let mut best = 0;
    let mut reaching: Vec<u32> = Vec::new();
    for mask in 0u32..(1 << n) {
        let attrs: Vec<usize> = (0..n).filter(|&a| mask & (1 << a) != 0).collect();
        let pos = positive_count_by_grouping(table, &attrs);
        if pos > best {
            best = pos;
            reaching.clear();
        }
        if pos == best {
            reaching.push(mask);
        }
    }
    let min_size = reaching.iter().map(|m| m.count_ones()).min().unwrap_or(0);
    let mut witnesses: Vec<Vec<String>> = reaching
        .into_iter()
        .filter(|m| m.count_ones() == min_size)
        .map(|m| {
            (0..n)
                .filter(|&a| m & (1 << a) != 0)
                .map(|a| table.calls()[a].clone())
                .collect()
        })
        .collect();
    witnesses.sort();
    let best = Significance {
        positive: best,
        universe: table.n_samples(),
    };
    Ok(ExhaustiveReduct {
        best_significance: best.value(),
        best,
        witnesses,
    })
}

/// Random decision table with small per-attribute bin alphabets, so that
/// indiscernibility blocks are non-trivial. Both labels always occur.
pub fn random_table<R: Rng>(rng: &mut R, n_samples: usize, n_attrs: usize) -> DecisionTable {
    let n_samples = n_samples.max(2);
    let alphabets: Vec<usize> = (0..n_attrs).map(|_| rng.random_range(1..=4)).collect();
    let rows: Vec<Vec<Bin>> = (0..n_samples)
        .map(|_| {
            alphabets
                .iter()
                .map(|&k| Bin::ALL[rng.random_range(0..k)])
                .collect()
        })
        .collect();
    let labels: Vec<Label> = (0..n_samples)
        .map(|i| match i {
            0 => Label::M,
            1 => Label::B,
            _ if rng.random_bool(0.5) => Label::M,
            _ => Label::B,
        })
        .collect();
    DecisionTable::from_rows(
        (0..n_samples).map(|i| format!("x{i}")).collect(),
        (0..n_attrs).map(|a| format!("a{a:02}")).collect(),
        labels,
        rows,
    )
    .expect("well-formed random table")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub region_checks: usize,
    pub region_mismatches: usize,
    pub reduct_checks: usize,
    pub reduct_mismatches: usize,
    pub minimality_violations: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.region_mismatches == 0 && self.reduct_mismatches == 0 && self.minimality_violations == 0
    }
}

/// Compare the rough-set implementation against the references on
/// `tables` random tables (up to 12 attributes, 25 samples), 20 random
/// attribute subsets each.
pub fn run_checks(tables: usize, seed_value: u64) -> CheckReport {
    let mut rng = seed::rng(seed_value, &[seed::SYNTH, 99]);
    let mut report = CheckReport::default();
    for _ in 0..tables {
        let n_attrs = rng.random_range(1..=12);
        let n_samples = rng.random_range(2..=25);
        let table = random_table(&mut rng, n_samples, n_attrs);
        for _ in 0..20 {
            let subset: Vec<String> = table
                .calls()
                .iter()
                .filter(|_| rng.random_bool(0.5))
                .cloned()
                .collect();
            report.region_checks += 1;
            let fast = positive_region(&table, &subset).expect("known attributes");
            let slow = naive_positive_region(&table, &subset).expect("known attributes");
            if fast != slow {
                report.region_mismatches += 1;
            }
        }
        let reduct = generate_reduct(&table).expect("both labels present");
        let exhaustive = exhaustive_reduct(&table).expect("within limit");
        report.reduct_checks += 1;
        if reduct.exact != exhaustive.best {
            report.reduct_mismatches += 1;
        }
        let calls = reduct.calls();
        for k in 0..calls.len() {
            let mut without = calls.clone();
            without.remove(k);
            let region = naive_positive_region(&table, &without).expect("known attributes");
            if region.len() >= reduct.exact.positive {
                report.minimality_violations += 1;
            }
        }
    }
    report
}
