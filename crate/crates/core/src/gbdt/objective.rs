//! Loss functions, their first and second derivatives with respect to raw
//! scores, and the masked class-weighted cross-entropy metric.

use crate::error::{Error, Result};

/// Default stabilizer inside the log ratio of the masked loss.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    SquaredError,
    AbsoluteError,
    MaskedWeightedSoftmax,
}

impl ObjectiveKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            ObjectiveKind::SquaredError => 0,
            ObjectiveKind::AbsoluteError => 1,
            ObjectiveKind::MaskedWeightedSoftmax => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ObjectiveKind::SquaredError),
            1 => Ok(ObjectiveKind::AbsoluteError),
            2 => Ok(ObjectiveKind::MaskedWeightedSoftmax),
            t => Err(Error::Malformed(format!("unknown objective kind {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    num_classes: usize,
    class_weights: Vec<f64>,
    epsilon: f64,
}

/// Training targets: real values for the regression objectives, class
/// indices for the softmax objective with `None` as the IGNORE sentinel.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Classes(Vec<Option<usize>>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Classes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether row `i` carries a trainable target.
    pub fn is_active(&self, i: usize) -> bool {
        match self {
            Targets::Real(_) => true,
            Targets::Classes(v) => v[i].is_some(),
        }
    }
}

impl Objective {
    pub fn squared_error() -> Self {
        Self {
            kind: ObjectiveKind::SquaredError,
            num_classes: 1,
            class_weights: Vec::new(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn absolute_error() -> Self {
        Self {
            kind: ObjectiveKind::AbsoluteError,
            num_classes: 1,
            class_weights: Vec::new(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn masked_softmax(class_weights: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::from_parts(
            ObjectiveKind::MaskedWeightedSoftmax,
            class_weights.len(),
            class_weights,
            epsilon,
        )
    }

    pub(crate) fn from_parts(
        kind: ObjectiveKind,
        num_classes: usize,
        class_weights: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon = {epsilon} must be positive")));
        }
        match kind {
            ObjectiveKind::MaskedWeightedSoftmax => {
                if num_classes < 2 || class_weights.len() != num_classes {
                    return Err(Error::InvalidParams(format!(
                        "softmax needs >= 2 classes with one weight each, got {num_classes} classes and {} weights",
                        class_weights.len()
                    )));
                }
                if let Some(w) = class_weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                    return Err(Error::InvalidParams(format!("class weight {w} must be positive")));
                }
            }
            _ => {
                if num_classes != 1 || !class_weights.is_empty() {
                    return Err(Error::InvalidParams(
                        "regression objectives have one output and no class weights".into(),
                    ));
                }
            }
        }
        Ok(Self {
            kind,
            num_classes,
            class_weights,
            epsilon,
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Raw-score dimensions per row: one for regression, `num_classes` for softmax.
    pub fn n_outputs(&self) -> usize {
        self.num_classes
    }

    pub fn class_weights(&self) -> &[f64] {
        &self.class_weights
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub(crate) fn check_targets(&self, targets: &Targets) -> Result<()> {
        match (self.kind, targets) {
            (ObjectiveKind::MaskedWeightedSoftmax, Targets::Classes(ys)) => {
                for (row, y) in ys.iter().enumerate() {
                    if let Some(c) = *y {
                        if c >= self.num_classes {
                            return Err(Error::InvalidClass {
                                row,
                                class: c,
                                num_classes: self.num_classes,
                            });
                        }
                    }
                }
                if ys.iter().all(Option::is_none) {
                    return Err(Error::AllIgnored);
                }
                Ok(())
            }
            (ObjectiveKind::SquaredError | ObjectiveKind::AbsoluteError, Targets::Real(ys)) => {
                if let Some(row) = ys.iter().position(|y| !y.is_finite()) {
                    return Err(Error::NonFiniteTarget { row });
                }
                Ok(())
            }
            (kind, _) => Err(Error::TargetKind(format!(
                "{kind:?} cannot train on these targets"
            ))),
        }
    }

    /// Per-row loss at raw scores `raw` (length `n_outputs`), without the
    /// epsilon stabilizer. Zero for IGNORE rows.
    pub fn row_loss(&self, raw: &[f64], target: RowTarget) -> f64 {
        match (self.kind, target) {
            (ObjectiveKind::SquaredError, RowTarget::Real(y)) => 0.5 * (raw[0] - y).powi(2),
            (ObjectiveKind::AbsoluteError, RowTarget::Real(y)) => (raw[0] - y).abs(),
            (ObjectiveKind::MaskedWeightedSoftmax, RowTarget::Class(Some(y))) => {
                let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + raw.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
                -self.class_weights[y] * (raw[y] - lse)
            }
            (ObjectiveKind::MaskedWeightedSoftmax, RowTarget::Class(None)) => 0.0,
            _ => f64::NAN,
        }
    }
}

/// A single row's target, borrowed from [`Targets`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowTarget {
    Real(f64),
    Class(Option<usize>),
}

impl Targets {
    pub fn row(&self, i: usize) -> RowTarget {
        match self {
            Targets::Real(v) => RowTarget::Real(v[i]),
            Targets::Classes(v) => RowTarget::Class(v[i]),
        }
    }
}

/// Numerically stable softmax of one row of raw scores, written into `out`.
pub fn softmax_into(raw: &[f64], out: &mut [f64]) {
    let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, z) in out.iter_mut().zip(raw) {
        *o = (z - m).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// First and second derivatives of the loss with respect to raw scores.
///
/// `raw` is row-major with `objective.n_outputs()` columns; the returned
/// gradient and hessian share that layout.
pub fn gradients(objective: &Objective, raw: &[f64], targets: &Targets) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = objective.n_outputs();
    if raw.len() != targets.len() * k {
        return Err(Error::Shape(format!(
            "{} raw scores for {} targets with {k} outputs",
            raw.len(),
            targets.len()
        )));
    }
    objective.check_targets(targets).or_else(|e| match e {
        // gradients are well defined even when every row is masked
        Error::AllIgnored => Ok(()),
        e => Err(e),
    })?;
    let mut grad = vec![0.0; raw.len()];
    let mut hess = vec![0.0; raw.len()];
    fill_gradients(objective, raw, targets, &mut grad, &mut hess);
    Ok((grad, hess))
}

pub(crate) fn fill_gradients(
    objective: &Objective,
    raw: &[f64],
    targets: &Targets,
    grad: &mut [f64],
    hess: &mut [f64],
) {
    match (objective.kind, targets) {
        (ObjectiveKind::SquaredError, Targets::Real(ys)) => {
            for (i, y) in ys.iter().enumerate() {
                grad[i] = raw[i] - y;
                hess[i] = 1.0;
            }
        }
        (ObjectiveKind::AbsoluteError, Targets::Real(ys)) => {
            for (i, y) in ys.iter().enumerate() {
                let d = raw[i] - y;
                grad[i] = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                hess[i] = 1.0;
            }
        }
        (ObjectiveKind::MaskedWeightedSoftmax, Targets::Classes(ys)) => {
            let k = objective.num_classes;
            let mut p = vec![0.0; k];
            for (i, y) in ys.iter().enumerate() {
                let g = &mut grad[i * k..(i + 1) * k];
                let h = &mut hess[i * k..(i + 1) * k];
                match *y {
                    None => {
                        g.fill(0.0);
                        h.fill(0.0);
                    }
                    Some(y) => {
                        softmax_into(&raw[i * k..(i + 1) * k], &mut p);
                        let w = objective.class_weights[y];
                        for c in 0..k {
                            let indicator = if c == y { 1.0 } else { 0.0 };
                            g[c] = w * (p[c] - indicator);
                            h[c] = w * p[c] * (1.0 - p[c]);
                        }
                    }
                }
            }
        }
        _ => unreachable!("targets checked against objective"),
    }
}

/// Class weights `w_c = N / (C * count_c)` over the non-IGNORE targets.
pub fn class_weights(targets: &[Option<usize>], num_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; num_classes];
    for (row, y) in targets.iter().enumerate() {
        if let Some(c) = *y {
            if c >= num_classes {
                return Err(Error::InvalidClass {
                    row,
                    class: c,
                    num_classes,
                });
            }
            counts[c] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(class, &count)| {
            if count == 0 {
                Err(Error::AbsentClass { class })
            } else {
                Ok(n as f64 / (num_classes as f64 * count as f64))
            }
        })
        .collect()
}

/// Masked, class-weighted cross-entropy over row-major probabilities.
///
/// Each non-IGNORE row contributes `-w_y * ln((p_y + eps) / (sum_c p_c + eps))`;
/// the total is divided by the sum of `w_y` over those rows. IGNORE rows do
/// not enter the numerator or the denominator.
pub fn masked_loss(
    probabilities: &[f64],
    targets: &[Option<usize>],
    class_weights: &[f64],
    epsilon: f64,
) -> Result<f64> {
    let k = class_weights.len();
    if k == 0 || probabilities.len() != targets.len() * k {
        return Err(Error::Shape(format!(
            "{} probabilities for {} rows of {k} classes",
            probabilities.len(),
            targets.len()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("epsilon = {epsilon} must be non-negative")));
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (i, y) in targets.iter().enumerate() {
        let Some(y) = *y else { continue };
        if y >= k {
            return Err(Error::InvalidClass {
                row: i,
                class: y,
                num_classes: k,
            });
        }
        let p = &probabilities[i * k..(i + 1) * k];
        let total: f64 = p.iter().sum();
        let w = class_weights[y];
        numerator += -w * ((p[y] + epsilon) / (total + epsilon)).ln();
        denominator += w;
    }
    if denominator == 0.0 {
        return Err(Error::AllIgnored);
    }
    Ok(numerator / denominator)
}
