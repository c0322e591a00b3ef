use rand::seq::SliceRandom;

use crate::{seed, Error, Label, Result};

/// Split sample indices into `k` disjoint folds with class proportions
/// preserved: each class is shuffled and dealt round-robin, the second class
/// continuing where the first stopped so fold sizes also stay within one.
pub fn stratified_folds(labels: &[Label], k: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("fold count must be at least 2, got {k}")));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (slot, class) in Label::ALL.into_iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                found: members.len(),
                required: k,
            });
        }
        members.shuffle(&mut seed::rng(seed_value, &[seed::FOLDS, slot as u64]));
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}
