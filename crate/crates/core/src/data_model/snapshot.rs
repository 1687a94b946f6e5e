use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use super::context::{TimeContext, SLOTS_PER_DAY};
use super::graph::NodeId;
use super::labels::{CongestionLabel, EtaLabel};

/// Volume lags per counter: t-15, t-30, t-45 and t-60 minutes, in that order.
pub const LAGS: usize = 4;

/// Identifies a snapshot by its calendar date and reference slot, printed as
/// `YYYY-MM-DD_SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SnapshotId {
    pub date: NaiveDate,
    pub slot: u16,
}

impl fmt::Display for SnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{:02}", self.date.format("%Y-%m-%d"), self.slot)
    }
}

impl FromStr for SnapshotId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (date, slot) = s
            .rsplit_once('_')
            .ok_or_else(|| format!("snapshot id {s:?} lacks '_'"))?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| e.to_string())?;
        let slot: u16 = slot.parse().map_err(|e| format!("slot {slot:?}: {e}"))?;
        if slot as usize >= SLOTS_PER_DAY {
            return Err(format!("slot {slot} outside 0..=95"));
        }
        Ok(SnapshotId { date, slot })
    }
}

/// One hour of counter volumes ending at the reference instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterSnapshot {
    pub city: String,
    pub id: SnapshotId,
    /// Known for training data, absent at test time.
    pub true_context: Option<TimeContext>,
    pub volumes: BTreeMap<NodeId, [Option<f64>; LAGS]>,
}

/// A training or evaluation snapshot together with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSnapshot {
    pub snapshot: CounterSnapshot,
    pub congestion: Vec<CongestionLabel>,
    pub etas: Vec<EtaLabel>,
}

impl LabeledSnapshot {
    pub fn date(&self) -> NaiveDate {
        self.snapshot.id.date
    }
}
