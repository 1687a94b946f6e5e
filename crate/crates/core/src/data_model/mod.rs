//! Road network, calendar context, counter snapshots and labels.
//!
//! Everything here is plain data: immutable once built and freely shared
//! between threads.

mod context;
mod graph;
mod labels;
mod snapshot;

pub use context::{weekend_flag, TimeContext, DAYS_PER_WEEK, MONTHS_PER_YEAR, SLOTS_PER_DAY};
pub use graph::{
    counter_hops, validate_graph, Edge, EdgeAttributes, EdgeId, Node, NodeId, RoadGraph,
    SuperSegment, SuperSegmentId, Violation,
};
pub use labels::{CongestionClass, CongestionLabel, EtaLabel, NUM_CLASSES};
pub use snapshot::{CounterSnapshot, LabeledSnapshot, SnapshotId, LAGS};
