//! Evaluation metrics and the evaluation report.

use serde::{Deserialize, Serialize};

use crate::data_model::{TimeContext, DAYS_PER_WEEK, MONTHS_PER_YEAR, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::gbdt::{class_weights, masked_loss};

/// Masked class-weighted cross-entropy; the same computation as
/// [`masked_loss`].
pub fn core_metric(
    probabilities: &[f64],
    labels: &[Option<usize>],
    class_weights: &[f64],
    epsilon: f64,
) -> Result<f64> {
    masked_loss(probabilities, labels, class_weights, epsilon)
}

/// [`core_metric`] with class weights taken from the evaluated labels themselves.
pub fn core_metric_self_weighted(
    probabilities: &[f64],
    labels: &[Option<usize>],
    num_classes: usize,
    epsilon: f64,
) -> Result<f64> {
    let w = class_weights(labels, num_classes)?;
    core_metric(probabilities, labels, &w, epsilon)
}

/// Mean absolute error.
pub fn extended_metric(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("ETA predictions"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} true ETAs",
            predicted.len(),
            truth.len()
        )));
    }
    Ok(predicted.iter().zip(truth).map(|(p, y)| (p - y).abs()).sum::<f64>() / predicted.len() as f64)
}

/// Distance between `a` and `b` on a cycle of length `period`.
pub fn cyclic_distance(a: i64, b: i64, period: i64) -> i64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDiagnostics {
    /// Fraction of exact matches.
    pub accuracy: f64,
    /// Mean cyclic absolute deviation.
    pub mad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Diagnostics {
    pub month: TargetDiagnostics,
    pub dow: TargetDiagnostics,
    pub slot: TargetDiagnostics,
}

/// Exact-match rate and mean cyclic deviation of each context field.
pub fn stage1_metric(predicted: &[TimeContext], truth: &[TimeContext]) -> Result<Stage1Diagnostics> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("context predictions"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predicted contexts for {} true contexts",
            predicted.len(),
            truth.len()
        )));
    }
    let n = predicted.len() as f64;
    let diag = |get: fn(&TimeContext) -> i64, period: usize| {
        let mut hits = 0usize;
        let mut dev = 0i64;
        for (p, t) in predicted.iter().zip(truth) {
            let d = cyclic_distance(get(p), get(t), period as i64);
            hits += (d == 0) as usize;
            dev += d;
        }
        TargetDiagnostics {
            accuracy: hits as f64 / n,
            mad: dev as f64 / n,
        }
    };
    Ok(Stage1Diagnostics {
        month: diag(|c| c.month() as i64, MONTHS_PER_YEAR),
        dow: diag(|c| c.day_of_week() as i64, DAYS_PER_WEEK),
        slot: diag(|c| c.slot() as i64, SLOTS_PER_DAY),
    })
}

/// Scores of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub core_loss: f64,
    pub extended_mae: f64,
    pub stage1: Stage1Diagnostics,
    pub snapshots: usize,
    pub core_rows: usize,
    pub core_ignored: usize,
    pub extended_rows: usize,
}

impl EvalReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report fields are plain numbers")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_examples() {
        assert_eq!(extended_metric(&[10.0, 20.0], &[12.0, 16.0]).unwrap(), 3.0);
        assert_eq!(extended_metric(&[100.0], &[58.5]).unwrap(), 41.5);
        assert_eq!(extended_metric(&[7.0, 8.0], &[7.0, 8.0]).unwrap(), 0.0);
        assert!(extended_metric(&[], &[]).is_err());
    }

    #[test]
    fn cyclic_deviation() {
        assert_eq!(cyclic_distance(0, 95, 96), 1);
        assert_eq!(cyclic_distance(1, 12, 12), 1);
        assert_eq!((1i64 - 12).abs(), 11);
        assert_eq!(cyclic_distance(0, 6, 7), 1);
        assert_eq!(cyclic_distance(10, 58, 96), 48);
    }

    #[test]
    fn stage1_examples() {
        let a = TimeContext::new(1, 0, 0).unwrap();
        let b = TimeContext::new(12, 0, 95).unwrap();
        let same = stage1_metric(&[a, b], &[a, b]).unwrap();
        assert_eq!(same.slot, TargetDiagnostics { accuracy: 1.0, mad: 0.0 });
        let off = stage1_metric(&[a], &[b]).unwrap();
        assert_eq!(off.slot.mad, 1.0);
        assert_eq!(off.month.mad, 1.0);
        assert_eq!(off.dow.accuracy, 1.0);
        assert!(stage1_metric(&[], &[]).is_err());
    }

    #[test]
    fn core_metric_on_uniform_predictions() {
        let p = vec![1.0 / 3.0; 9];
        let loss = core_metric_self_weighted(&p, &[Some(0), Some(1), Some(2)], 3, 1e-9).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-8);
        assert!(core_metric(&p[..3], &[None], &[1.0; 3], 1e-9).is_err());
    }

    #[test]
    fn report_round_trips_through_toml() {
        let d = TargetDiagnostics { accuracy: 0.5, mad: 1.25 };
        let r = EvalReport {
            core_loss: 0.81,
            extended_mae: 12.5,
            stage1: Stage1Diagnostics { month: d, dow: d, slot: d },
            snapshots: 3,
            core_rows: 30,
            core_ignored: 4,
            extended_rows: 9,
        };
        assert_eq!(EvalReport::from_toml(&r.to_toml()).unwrap(), r);
    }
}
