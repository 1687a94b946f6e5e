use std::fmt;
use std::str::FromStr;

use super::graph::{EdgeId, SuperSegmentId};

/// Number of congestion classes.
pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CongestionClass {
    Red = 0,
    Yellow = 1,
    Green = 2,
}

impl CongestionClass {
    pub const ALL: [CongestionClass; NUM_CLASSES] =
        [CongestionClass::Red, CongestionClass::Yellow, CongestionClass::Green];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CongestionClass::Red => "red",
            CongestionClass::Yellow => "yellow",
            CongestionClass::Green => "green",
        }
    }
}

impl fmt::Display for CongestionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CongestionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "red" => Ok(CongestionClass::Red),
            "yellow" => Ok(CongestionClass::Yellow),
            "green" => Ok(CongestionClass::Green),
            other => Err(format!("unknown congestion class {other:?}")),
        }
    }
}

/// Per-edge congestion label; `class == None` is the IGNORE sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongestionLabel {
    pub edge: EdgeId,
    pub class: Option<CongestionClass>,
}

/// Travel time along a super-segment, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaLabel {
    pub supersegment: SuperSegmentId,
    pub eta: f64,
}
