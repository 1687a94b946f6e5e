use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_model::{LabeledSnapshot, DAYS_PER_WEEK};
use crate::error::{Error, Result};

fn week_start(d: NaiveDate) -> NaiveDate {
    d - Days::new(d.weekday().num_days_from_monday() as u64)
}

/// Picks `validation_weeks` whole Monday-to-Sunday weeks of `days` at
/// random. With `contiguous`, the weeks are consecutive. Days of partial
/// weeks always stay in training. Returns `(train days, validation days)`,
/// both sorted.
pub fn split_validation(
    days: &[NaiveDate],
    validation_weeks: usize,
    seed: u64,
    contiguous: bool,
) -> Result<(Vec<NaiveDate>, Vec<NaiveDate>)> {
    if validation_weeks == 0 {
        return Err(Error::Config("validation_weeks must be at least 1".into()));
    }
    let unique: BTreeSet<NaiveDate> = days.iter().copied().collect();
    let mut weeks: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for d in &unique {
        *weeks.entry(week_start(*d)).or_default() += 1;
    }
    let whole: Vec<NaiveDate> = weeks
        .into_iter()
        .filter(|(_, n)| *n == DAYS_PER_WEEK)
        .map(|(w, _)| w)
        .collect();
    if whole.len() <= validation_weeks {
        return Err(Error::InsufficientSpan {
            weeks: whole.len(),
            requested: validation_weeks,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: BTreeSet<NaiveDate> = if contiguous {
        let start = rng.random_range(0..=whole.len() - validation_weeks);
        whole[start..start + validation_weeks].iter().copied().collect()
    } else {
        sample(&mut rng, whole.len(), validation_weeks)
            .into_iter()
            .map(|i| whole[i])
            .collect()
    };
    Ok(unique
        .into_iter()
        .partition(|d| !chosen.contains(&week_start(*d))))
}

/// Splits snapshots by the validation days of [`split_validation`].
pub fn partition_snapshots(
    snapshots: &[LabeledSnapshot],
    validation_days: &[NaiveDate],
) -> (Vec<LabeledSnapshot>, Vec<LabeledSnapshot>) {
    let val: BTreeSet<NaiveDate> = validation_days.iter().copied().collect();
    snapshots.iter().cloned().partition(|s| !val.contains(&s.date()))
}
