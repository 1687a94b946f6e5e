use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data_model::SLOTS_PER_DAY;
use crate::encoding::DEFAULT_PSEUDOCOUNT;
use crate::error::{Error, Result};
use crate::gbdt::{GbdtParams, DEFAULT_EPSILON};
use crate::staging::{EnsembleParams, FeatureSet, StageTwoOptions};

use super::synth::SyntheticSpec;

/// Everything a pipeline command needs, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub city: String,
    /// Dataset directory (graph files plus `train/` and `test/`).
    pub data_dir: PathBuf,
    /// Where bundles, predictions and reports are written.
    pub out_dir: PathBuf,
    pub slots_per_day: usize,
    pub pseudocount: f64,
    pub preset_a: GbdtParams,
    pub preset_b: GbdtParams,
    /// Applied to every model, overriding the presets.
    pub early_stopping_rounds: usize,
    pub validation_weeks: usize,
    /// Validation weeks are consecutive rather than drawn independently.
    pub contiguous_validation: bool,
    /// Snapshots per day used as stage-two training rows; 0 uses all.
    pub stage2_rows_per_day: usize,
    /// Also train the stage-two variant without context columns.
    pub train_context_free: bool,
    pub seed: u64,
    pub synthetic: SyntheticSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            city: "synthetic".into(),
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            slots_per_day: SLOTS_PER_DAY,
            pseudocount: DEFAULT_PSEUDOCOUNT,
            preset_a: GbdtParams::preset_a(),
            preset_b: GbdtParams::preset_b(),
            early_stopping_rounds: 1000,
            validation_weeks: 2,
            contiguous_validation: true,
            stage2_rows_per_day: 8,
            train_context_free: true,
            seed: 0,
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            for p in [&mut cfg.data_dir, &mut cfg.out_dir] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots_per_day != SLOTS_PER_DAY {
            return Err(Error::Config(format!(
                "slots_per_day = {} is unsupported; only {SLOTS_PER_DAY} is",
                self.slots_per_day
            )));
        }
        if self.validation_weeks == 0 {
            return Err(Error::Config("validation_weeks must be at least 1".into()));
        }
        if !(self.pseudocount > 0.0 && self.pseudocount.is_finite()) {
            return Err(Error::Config(format!("pseudocount = {} must be positive", self.pseudocount)));
        }
        if self.city.is_empty() || self.city.contains(['/', '\\']) {
            return Err(Error::Config(format!("city name {:?} is not a plain name", self.city)));
        }
        let e = self.ensemble();
        e.preset_a.validate()?;
        e.preset_b.validate()?;
        self.synthetic.validate()
    }

    /// Both presets with the shared seed and early-stopping patience applied.
    pub fn ensemble(&self) -> EnsembleParams {
        let mut e = EnsembleParams {
            preset_a: self.preset_a.clone(),
            preset_b: self.preset_b.clone(),
        }
        .with_seed(self.seed);
        e.preset_a.early_stopping_rounds = self.early_stopping_rounds;
        e.preset_b.early_stopping_rounds = self.early_stopping_rounds;
        e
    }

    pub fn stage2_options(&self, feature_set: FeatureSet) -> StageTwoOptions {
        StageTwoOptions {
            params: self.ensemble(),
            pseudocount: self.pseudocount,
            epsilon: DEFAULT_EPSILON,
            feature_set,
            rows_per_day: self.stage2_rows_per_day,
            seed: self.seed,
        }
    }

    /// SHA-256 of the configuration with its paths cleared, in hex.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.data_dir = PathBuf::new();
        c.out_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.bundle", self.city))
    }
}
