use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::trace::CallCountRecord;
use crate::{seed, Error, Label, Result};

/// Parameters of a synthetic call-count corpus.
///
/// Every call's count in a sample is `max(0, round(mean + noise_std * Z))`
/// with `Z` standard normal. The mean is `base_mean` for every call in
/// every class, except that a planted call's mean is raised by
/// `effect_size` in the class it is planted for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub samples_per_class: usize,
    pub vocabulary_size: usize,
    pub planted_malware_calls: Vec<String>,
    pub planted_benign_calls: Vec<String>,
    pub effect_size: f64,
    pub noise_std: f64,
    #[serde(default)]
    pub base_mean: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub malware: Vec<String>,
    pub benign: Vec<String>,
}

pub fn call_name(index: usize) -> String {
    format!("sc{index:03}")
}

impl SynthSpec {
    /// Spec over `sc000..` with planted calls drawn at seeded random
    /// positions of the vocabulary.
    pub fn planted(
        samples_per_class: usize,
        vocabulary_size: usize,
        n_malware: usize,
        n_benign: usize,
        effect_size: f64,
        noise_std: f64,
        seed_value: u64,
    ) -> Result<Self> {
        let wanted = n_malware + n_benign;
        if wanted > vocabulary_size {
            return Err(Error::Config(format!(
                "{wanted} planted calls exceed vocabulary of {vocabulary_size}"
            )));
        }
        let mut rng = seed::rng(seed_value, &[seed::SYNTH, 0]);
        let mut picks = sample(&mut rng, vocabulary_size, wanted).into_vec();
        let benign = picks.split_off(n_malware);
        let names = |mut ix: Vec<usize>| {
            ix.sort_unstable();
            ix.into_iter().map(call_name).collect()
        };
        Ok(SynthSpec {
            samples_per_class,
            vocabulary_size,
            planted_malware_calls: names(picks),
            planted_benign_calls: names(benign),
            effect_size,
            noise_std,
            base_mean: 0.0,
            seed: seed_value,
        })
    }

    pub fn vocabulary(&self) -> Vec<String> {
        (0..self.vocabulary_size).map(call_name).collect()
    }

    pub fn answer_key(&self) -> AnswerKey {
        AnswerKey {
            malware: self.planted_malware_calls.clone(),
            benign: self.planted_benign_calls.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_class == 0 || self.vocabulary_size == 0 {
            return Err(Error::Config("samples_per_class and vocabulary_size must be positive".into()));
        }
        if !(self.effect_size > 0.0 && self.effect_size.is_finite()) {
            return Err(Error::Config(format!("effect_size must be > 0, got {}", self.effect_size)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if !self.base_mean.is_finite() {
            return Err(Error::Config("base_mean must be finite".into()));
        }
        let vocab: HashSet<String> = self.vocabulary().into_iter().collect();
        let mut seen = HashSet::new();
        for call in self.planted_malware_calls.iter().chain(&self.planted_benign_calls) {
            if !vocab.contains(call) {
                return Err(Error::Config(format!("planted call {call:?} outside vocabulary")));
            }
            if !seen.insert(call) {
                return Err(Error::Config(format!("planted call {call:?} listed twice")));
            }
        }
        Ok(())
    }
}

/// Draw the corpus: all malware samples (`m0000..`) then all benign
/// samples (`b0000..`).
pub fn generate(spec: &SynthSpec) -> Result<(Vec<CallCountRecord>, AnswerKey)> {
    spec.validate()?;
    let vocab = spec.vocabulary();
    let planted_for = |call: &str| -> Option<Label> {
        if spec.planted_malware_calls.iter().any(|c| c == call) {
            Some(Label::M)
        } else if spec.planted_benign_calls.iter().any(|c| c == call) {
            Some(Label::B)
        } else {
            None
        }
    };
    let class_of: Vec<Option<Label>> = vocab.iter().map(|c| planted_for(c)).collect();

    let mut rng = seed::rng(spec.seed, &[seed::SYNTH, 1]);
    let mut records = Vec::with_capacity(2 * spec.samples_per_class);
    for label in Label::ALL {
        let prefix = if label == Label::M { "m" } else { "b" };
        for s in 0..spec.samples_per_class {
            let counts: Vec<(String, u64)> = vocab
                .iter()
                .zip(&class_of)
                .map(|(call, planted)| {
                    let mut mean = spec.base_mean;
                    if *planted == Some(label) {
                        mean += spec.effect_size;
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    let n = (mean + spec.noise_std * z).round().max(0.0) as u64;
                    (call.clone(), n)
                })
                .collect();
            records.push(CallCountRecord::new(format!("{prefix}{s:04}"), label, counts));
        }
    }
    Ok((records, spec.answer_key()))
}
