use std::fs;
use std::path::{Path, PathBuf};

use rsst_core::eval::{CvConfig, ForestConfig};
use rsst_core::stat_filter::{critical_value, DEFAULT_Z_CRIT};
use rsst_core::{Error, FvtOptions, Result, Selector, Weighting, ZTestConfig};
use serde::{Deserialize, Serialize};

/// Every tunable of the pipeline. Loaded from `--config`, overridden field
/// by field by command-line flags, and embedded in each report with the
/// values actually used, so a report's `config` can be fed back in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fvt: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_df: Option<usize>,
    /// Fixed at 4; present so configs can state it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Weighting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Selector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_crit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_as_stddev: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_samples_split: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features_per_split: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ALPHA: f64 = 0.05;

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        PipelineConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: PipelineConfig) -> PipelineConfig {
        overlay!(
            self, top, manifest, records, fvt, selection, out_dir, min_df, bins, weighting, method, alpha, z_crit,
            sigma_as_stddev, top_k, lengths, folds, trees, max_depth, min_samples_split, features_per_split, seed
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_path(&self, explicit: Option<&Path>, default_name: &str) -> PathBuf {
        match explicit {
            Some(p) => p.to_path_buf(),
            None => self.out_dir.clone().unwrap_or_default().join(default_name),
        }
    }

    pub fn fvt_options(&self) -> Result<FvtOptions> {
        let min_df = self.min_df.unwrap_or(1);
        if min_df == 0 {
            return Err(Error::Config("min_df must be at least 1".into()));
        }
        if let Some(bins) = self.bins {
            if bins != 4 {
                return Err(Error::Config(format!("bins is fixed at 4, got {bins}")));
            }
        }
        Ok(FvtOptions {
            min_df,
            weighting: self.weighting.unwrap_or_default(),
        })
    }

    /// `z_crit` if set, else the quantile of an explicit `alpha`, else 1.96.
    pub fn z_test(&self) -> Result<ZTestConfig> {
        let z_crit = match (self.z_crit, self.alpha) {
            (Some(z), _) => z,
            (None, Some(alpha)) => critical_value(alpha)?,
            (None, None) => DEFAULT_Z_CRIT,
        };
        if !(z_crit.is_finite() && z_crit > 0.0) {
            return Err(Error::Config(format!("z_crit must be positive, got {z_crit}")));
        }
        if let Some(alpha) = self.alpha {
            critical_value(alpha)?;
        }
        Ok(ZTestConfig {
            z_crit,
            sigma_as_stddev: self.sigma_as_stddev.unwrap_or(false),
        })
    }

    pub fn cv(&self) -> Result<CvConfig> {
        let defaults = ForestConfig::default();
        let forest = ForestConfig {
            trees: self.trees.unwrap_or(defaults.trees),
            max_depth: self.max_depth.unwrap_or(defaults.max_depth),
            min_samples_split: self.min_samples_split.unwrap_or(defaults.min_samples_split),
            features_per_split: self.features_per_split,
            seed: self.seed(),
        };
        forest.validate()?;
        if forest.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        let folds = self.folds.unwrap_or(10);
        if folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {folds}")));
        }
        Ok(CvConfig { folds, forest })
    }

    pub fn top_k(&self) -> Result<Option<usize>> {
        match self.top_k {
            Some(0) => Err(Error::Config("top_k must be at least 1".into())),
            k => Ok(k),
        }
    }
}
