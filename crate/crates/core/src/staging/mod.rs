//! The two model stages.
//!
//! Stage one recovers the calendar context of a snapshot from counter
//! volumes alone. Stage two predicts per-edge congestion probabilities and
//! per-super-segment travel times from counter volumes, static attributes
//! and target encodings looked up at a given context.

mod stage_one;
mod stage_two;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::GbdtParams;

pub use stage_one::{
    combine_head, predict_context, stage1_features, train_stage1, ContextTarget, StageOneLayout,
    StageOneModel,
};
pub use stage_two::{
    predict_stage2, predict_te_baseline, train_stage2, ContextInput, FeatureSet,
    StageTwoOptions, StageTwoModel, StageTwoPrediction,
};

/// The two boosting configurations every ensemble averages over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleParams {
    pub preset_a: GbdtParams,
    pub preset_b: GbdtParams,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            preset_a: GbdtParams::preset_a(),
            preset_b: GbdtParams::preset_b(),
        }
    }
}

impl EnsembleParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.preset_a.seed = seed;
        self.preset_b.seed = seed;
        self
    }

    /// Caps the round budget of both presets.
    pub fn with_rounds(mut self, num_rounds: usize, early_stopping_rounds: usize) -> Self {
        for p in [&mut self.preset_a, &mut self.preset_b] {
            p.num_rounds = num_rounds;
            p.early_stopping_rounds = early_stopping_rounds;
        }
        self
    }
}

/// How many rounds each member of a stage trains for.
#[derive(Debug, Clone, Copy)]
pub enum Schedule<'a, V: ?Sized> {
    /// `num_rounds` from the parameters, no validation.
    Full,
    /// Early stopping against a held-out set.
    EarlyStopping(&'a V),
    /// Exactly the given round count per member, in member order.
    Replay(&'a [usize]),
}

impl<V: ?Sized> Schedule<'_, V> {
    fn member_params(&self, base: &GbdtParams, member: usize) -> Result<GbdtParams> {
        let mut p = base.clone();
        if let Schedule::Replay(rounds) = self {
            p.num_rounds = *rounds.get(member).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "round schedule has {} entries, member {member} needs one",
                    rounds.len()
                ))
            })?;
        }
        Ok(p)
    }
}
