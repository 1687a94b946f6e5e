//! Two-stage gradient boosting for short-term traffic state estimation.
//!
//! Stage one recovers the calendar context (month, day of week, time slot)
//! of a snapshot from loop-counter volumes alone. Stage two predicts per-edge
//! congestion classes and per-super-segment travel times from target-encoded
//! features, static graph attributes and the recovered context.

pub mod codec;
pub mod data_model;
pub mod encoding;
pub mod error;
pub mod gbdt;
pub mod metrics;
pub mod pipeline;
pub mod staging;

pub use error::{Error, Result};
