//! Histogram gradient-boosted decision trees.
//!
//! One engine covers squared error, absolute error with median leaves and a
//! masked class-weighted softmax. Missing values take a learned default
//! direction at every split.

mod binning;
mod booster;
mod grow;
mod matrix;
mod objective;
mod params;
mod serialize;
mod tree;

pub use binning::BinMapper;
pub use booster::{train, train_logged, GbdtModel, TrainLog};
pub use matrix::{is_missing, FeatureMatrix, MISSING};
pub use objective::{
    class_weights, gradients, masked_loss, softmax_into, Objective, ObjectiveKind, RowTarget,
    Targets, DEFAULT_EPSILON,
};
pub use params::GbdtParams;
pub use serialize::{deserialize, serialize};
pub(crate) use serialize::{decode_model, encode_model};
pub use tree::{median, refine_leaves, Tree, TreeNode};
