use crate::data_model::SLOTS_PER_DAY;
use crate::error::{Error, Result};

/// Half-width of the smoothing window, in slots.
pub const SMOOTHING_RADIUS: usize = 4;

/// Weight of the neighbor at distance `i` (the center has weight 1).
pub fn neighbor_weight(i: usize) -> f64 {
    ((i + 1) as f64).powi(4)
}

/// `1 + 2 * sum_{i=1..4} (i+1)^4`.
pub fn smoothing_denominator() -> f64 {
    1.0 + 2.0 * (1..=SMOOTHING_RADIUS).map(neighbor_weight).sum::<f64>()
}

/// Smoothed value at slot `t` of the per-slot series `te`, wrapping around midnight.
pub(crate) fn smoothed_at(te: impl Fn(usize) -> f64, t: usize) -> f64 {
    let n = SLOTS_PER_DAY;
    let mut acc = te(t);
    for i in 1..=SMOOTHING_RADIUS {
        acc += (te((t + n - i) % n) + te((t + i) % n)) * neighbor_weight(i);
    }
    acc / smoothing_denominator()
}

/// Windowed average of a per-slot encoding over `t-4..=t+4` (cyclic), with
/// weight 1 at the center and `(i+1)^4` at distance `i`.
pub fn smoothed_te(te_by_slot: &[f64]) -> Result<Vec<f64>> {
    if te_by_slot.len() != SLOTS_PER_DAY {
        return Err(Error::Shape(format!(
            "smoothing needs {SLOTS_PER_DAY} slots, got {}",
            te_by_slot.len()
        )));
    }
    Ok((0..SLOTS_PER_DAY)
        .map(|t| smoothed_at(|s| te_by_slot[s], t))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn denominator_is_1957() {
        let direct = 1.0 + 2.0 * (16.0 + 81.0 + 256.0 + 625.0);
        assert_eq!(direct, 1957.0);
        assert_eq!(smoothing_denominator(), 1957.0);
    }

    #[test]
    fn impulse_response() {
        let mut v = vec![0.0; SLOTS_PER_DAY];
        v[0] = 1.0;
        let s = smoothed_te(&v).unwrap();
        assert_eq!(s[0], 1.0 / 1957.0);
        assert_eq!(s[1], 16.0 / 1957.0);
        assert_eq!(s[95], 16.0 / 1957.0);
        assert_eq!(s[4], 625.0 / 1957.0);
        assert_eq!(s[5], 0.0);
        assert_eq!(s[91], 0.0);
    }

    #[test]
    fn constant_is_fixed_point() {
        let s = smoothed_te(&vec![123.5; SLOTS_PER_DAY]).unwrap();
        assert!(s.iter().all(|v| (v - 123.5).abs() < 1e-12));
        assert!(smoothed_te(&[1.0; 10]).is_err());
    }
}
