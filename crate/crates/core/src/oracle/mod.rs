//! Synthetic corpora with planted ground truth, and brute-force reference
//! implementations of the rough-set quantities.
//!
//! The references here share no code with [`crate::roughset`]: positive
//! regions are computed by pairwise comparison and reducts by subset
//! enumeration with hash grouping.

mod brute;
mod synth;

pub use brute::{
    exhaustive_reduct, naive_positive_region, naive_positive_region_by_index, random_table, run_checks,
    CheckReport, ExhaustiveReduct, EXHAUSTIVE_LIMIT,
};
pub use synth::{generate, AnswerKey, SynthSpec};
