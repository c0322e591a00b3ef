//! Shared inputs for the benchmarks.

use rsst_core::oracle::{generate, SynthSpec};
use rsst_core::CallCountRecord;

/// Synthetic corpus with `samples_per_class` per class over `vocabulary`
/// calls, five of them planted.
pub fn corpus(samples_per_class: usize, vocabulary: usize) -> Vec<CallCountRecord> {
    let spec = SynthSpec {
        base_mean: 1.0,
        ..SynthSpec::planted(samples_per_class, vocabulary, 3, 2, 0.75, 0.5, 42).expect("valid spec")
    };
    generate(&spec).expect("valid spec").0
}
