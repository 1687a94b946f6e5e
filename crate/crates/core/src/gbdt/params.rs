use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of one boosting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Per-round row sampling fraction.
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub colsample_bylevel: f64,
    pub num_rounds: usize,
    pub early_stopping_rounds: usize,
    pub min_samples_leaf: usize,
    pub l2_reg: f64,
    pub histogram_bins: usize,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            max_depth: 5,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            colsample_bylevel: 1.0,
            num_rounds: 10_000,
            early_stopping_rounds: 1_000,
            min_samples_leaf: 20,
            l2_reg: 1.0,
            histogram_bins: 256,
            seed: 0,
        }
    }
}

impl GbdtParams {
    /// Slow, heavily sampled configuration: depth 5, learning rate 0.01,
    /// half the rows per round and 90% of columns per tree and per level.
    pub fn preset_a() -> Self {
        Self {
            learning_rate: 0.01,
            subsample: 0.5,
            colsample_bytree: 0.9,
            colsample_bylevel: 0.9,
            ..Self::default()
        }
    }

    /// Fast configuration: learning rate 0.1 and defaults otherwise.
    pub fn preset_b() -> Self {
        Self {
            learning_rate: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} = {v} outside (0, 1]")))
            }
        };
        if self.max_depth == 0 {
            return Err(Error::InvalidParams("max_depth must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning_rate = {} must be positive",
                self.learning_rate
            )));
        }
        unit("subsample", self.subsample)?;
        unit("colsample_bytree", self.colsample_bytree)?;
        unit("colsample_bylevel", self.colsample_bylevel)?;
        if self.num_rounds == 0 {
            return Err(Error::InvalidParams("num_rounds must be positive".into()));
        }
        if self.early_stopping_rounds == 0 {
            return Err(Error::InvalidParams(
                "early_stopping_rounds must be positive".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParams("min_samples_leaf must be positive".into()));
        }
        if !(self.l2_reg >= 0.0 && self.l2_reg.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "l2_reg = {} must be non-negative",
                self.l2_reg
            )));
        }
        if !(2..=u16::MAX as usize - 1).contains(&self.histogram_bins) {
            return Err(Error::InvalidParams(format!(
                "histogram_bins = {} outside 2..=65534",
                self.histogram_bins
            )));
        }
        Ok(())
    }
}
