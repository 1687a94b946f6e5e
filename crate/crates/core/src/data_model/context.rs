use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fifteen-minute bins per day.
pub const SLOTS_PER_DAY: usize = 96;
pub const DAYS_PER_WEEK: usize = 7;
pub const MONTHS_PER_YEAR: usize = 12;

/// Weekend days under the 0 = Monday convention.
///
/// Panics when `day_of_week` is outside `0..=6`.
pub fn weekend_flag(day_of_week: u8) -> bool {
    assert!(
        (day_of_week as usize) < DAYS_PER_WEEK,
        "day_of_week {day_of_week} out of range 0..=6"
    );
    day_of_week >= 5
}

/// Calendar position of a snapshot: the targets of stage one and the
/// calendar features of stage two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeContext {
    month: u8,
    day_of_week: u8,
    slot: u16,
}

impl TimeContext {
    pub fn new(month: u8, day_of_week: u8, slot: u16) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidParams(format!("month {month} outside 1..=12")));
        }
        if day_of_week as usize >= DAYS_PER_WEEK {
            return Err(Error::InvalidParams(format!(
                "day_of_week {day_of_week} outside 0..=6"
            )));
        }
        if slot as usize >= SLOTS_PER_DAY {
            return Err(Error::InvalidParams(format!("slot {slot} outside 0..=95")));
        }
        Ok(Self {
            month,
            day_of_week,
            slot,
        })
    }

    pub fn from_date(date: NaiveDate, slot: u16) -> Result<Self> {
        Self::new(
            date.month() as u8,
            date.weekday().num_days_from_monday() as u8,
            slot,
        )
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day_of_week(&self) -> u8 {
        self.day_of_week
    }

    pub fn slot(&self) -> u16 {
        self.slot
    }

    pub fn is_weekend(&self) -> bool {
        weekend_flag(self.day_of_week)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weekend_days() {
        assert!(!weekend_flag(0));
        assert!(weekend_flag(5));
        assert!(!weekend_flag(4));
        let weekend: Vec<u8> = (0..7).filter(|&d| weekend_flag(d)).collect();
        assert_eq!(weekend, vec![5, 6]);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn weekend_flag_rejects_day_seven() {
        weekend_flag(7);
    }

    #[test]
    fn context_from_date() {
        // 2022-03-14 was a Monday.
        let ctx = TimeContext::from_date(NaiveDate::from_ymd_opt(2022, 3, 14).unwrap(), 37).unwrap();
        assert_eq!((ctx.month(), ctx.day_of_week(), ctx.slot()), (3, 0, 37));
        assert!(!ctx.is_weekend());
        let sunday = TimeContext::from_date(NaiveDate::from_ymd_opt(2022, 3, 20).unwrap(), 0).unwrap();
        assert!(sunday.is_weekend());
    }

    #[test]
    fn context_ranges_are_enforced() {
        assert!(TimeContext::new(0, 0, 0).is_err());
        assert!(TimeContext::new(13, 0, 0).is_err());
        assert!(TimeContext::new(1, 7, 0).is_err());
        assert!(TimeContext::new(1, 0, 96).is_err());
        assert!(TimeContext::new(12, 6, 95).is_ok());
    }
}
