use std::collections::HashMap;

use chrono::NaiveDate;

use crate::data_model::{
    CongestionClass, CounterSnapshot, NodeId, RoadGraph, TimeContext, NUM_CLASSES,
};
use crate::gbdt::{FeatureMatrix, MISSING};

use super::cc::CcEncodingTable;
use super::eta::EtaEncodingTable;
use super::key::Conditioning;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calendar {
    Slot,
    Month,
    Dow,
    IsWeekend,
}

impl Calendar {
    fn name(self) -> &'static str {
        match self {
            Calendar::Slot => "slot",
            Calendar::Month => "month",
            Calendar::Dow => "dow",
            Calendar::IsWeekend => "is_weekend",
        }
    }

    fn value(self, c: &TimeContext) -> f64 {
        match self {
            Calendar::Slot => c.slot() as f64,
            Calendar::Month => c.month() as f64,
            Calendar::Dow => c.day_of_week() as f64,
            Calendar::IsWeekend => c.is_weekend() as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatic {
    HighwayImportance,
    Oneway,
    HighwayClass,
    Tunnel,
    SpeedKph,
    MaxSpeed,
    CounterDistanceHops,
    Lanes,
    LengthM,
    SourceNodeId,
    SinkNodeId,
    EdgeId,
    SinkInDegree,
    SourceOutDegree,
    SourceInDegree,
    SinkOutDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Source,
    Sink,
}

/// One column of the congestion feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreColumn {
    Te(CongestionClass, Conditioning),
    Calendar(Calendar),
    Static(EdgeStatic),
    /// Volume of an endpoint `lag` quarter-hours back (0 = 15 minutes).
    Volume(Endpoint, usize),
}

use CongestionClass::{Green, Red, Yellow};
use Conditioning as K;

/// The 46 congestion features in canonical order.
pub const CORE_COLUMNS: [CoreColumn; 46] = [
    CoreColumn::Te(Green, K::SlotWeekend),
    CoreColumn::Te(Red, K::Slot),
    CoreColumn::Te(Green, K::Slot),
    CoreColumn::Static(EdgeStatic::HighwayImportance),
    CoreColumn::Te(Red, K::SlotWeekend),
    CoreColumn::Te(Yellow, K::SlotWeekend),
    CoreColumn::Te(Red, K::Weekend),
    CoreColumn::Calendar(Calendar::IsWeekend),
    CoreColumn::Te(Yellow, K::Slot),
    CoreColumn::Te(Yellow, K::Weekend),
    CoreColumn::Calendar(Calendar::Slot),
    CoreColumn::Calendar(Calendar::Month),
    CoreColumn::Te(Green, K::SlotDow),
    CoreColumn::Te(Green, K::Dow),
    CoreColumn::Te(Red, K::Dow),
    CoreColumn::Calendar(Calendar::Dow),
    CoreColumn::Static(EdgeStatic::Oneway),
    CoreColumn::Static(EdgeStatic::HighwayClass),
    CoreColumn::Te(Red, K::SlotDow),
    CoreColumn::Te(Red, K::Unconditional),
    CoreColumn::Te(Green, K::Weekend),
    CoreColumn::Static(EdgeStatic::Tunnel),
    CoreColumn::Te(Yellow, K::Dow),
    CoreColumn::Static(EdgeStatic::SpeedKph),
    CoreColumn::Static(EdgeStatic::MaxSpeed),
    CoreColumn::Te(Yellow, K::Unconditional),
    CoreColumn::Te(Green, K::Unconditional),
    CoreColumn::Static(EdgeStatic::CounterDistanceHops),
    CoreColumn::Static(EdgeStatic::Lanes),
    CoreColumn::Static(EdgeStatic::LengthM),
    CoreColumn::Static(EdgeStatic::SourceNodeId),
    CoreColumn::Static(EdgeStatic::SinkNodeId),
    CoreColumn::Static(EdgeStatic::EdgeId),
    CoreColumn::Static(EdgeStatic::SinkInDegree),
    CoreColumn::Static(EdgeStatic::SourceOutDegree),
    CoreColumn::Static(EdgeStatic::SourceInDegree),
    CoreColumn::Static(EdgeStatic::SinkOutDegree),
    CoreColumn::Te(Yellow, K::SlotDow),
    CoreColumn::Volume(Endpoint::Sink, 0),
    CoreColumn::Volume(Endpoint::Source, 0),
    CoreColumn::Volume(Endpoint::Sink, 2),
    CoreColumn::Volume(Endpoint::Sink, 3),
    CoreColumn::Volume(Endpoint::Source, 3),
    CoreColumn::Volume(Endpoint::Source, 2),
    CoreColumn::Volume(Endpoint::Sink, 1),
    CoreColumn::Volume(Endpoint::Source, 1),
];

impl CoreColumn {
    pub fn name(self) -> String {
        match self {
            CoreColumn::Te(class, K::Unconditional) => format!("te_{class}"),
            CoreColumn::Te(class, cond) => format!("te_{class}_{}", cond.suffix()),
            CoreColumn::Calendar(c) => c.name().to_string(),
            CoreColumn::Static(s) => match s {
                EdgeStatic::HighwayImportance => "highway_importance",
                EdgeStatic::Oneway => "oneway",
                EdgeStatic::HighwayClass => "highway_class",
                EdgeStatic::Tunnel => "tunnel",
                EdgeStatic::SpeedKph => "speed_kph",
                EdgeStatic::MaxSpeed => "maxspeed",
                EdgeStatic::CounterDistanceHops => "counter_distance_hops",
                EdgeStatic::Lanes => "lanes",
                EdgeStatic::LengthM => "length_m",
                EdgeStatic::SourceNodeId => "source_node_id",
                EdgeStatic::SinkNodeId => "sink_node_id",
                EdgeStatic::EdgeId => "edge_id",
                EdgeStatic::SinkInDegree => "sink_in_degree",
                EdgeStatic::SourceOutDegree => "source_out_degree",
                EdgeStatic::SourceInDegree => "source_in_degree",
                EdgeStatic::SinkOutDegree => "sink_out_degree",
            }
            .to_string(),
            CoreColumn::Volume(end, lag) => {
                let end = match end {
                    Endpoint::Source => "source",
                    Endpoint::Sink => "sink",
                };
                format!("{end}_vol_lag{}", 15 * (lag + 1))
            }
        }
    }

    /// Whether the column depends on the snapshot's calendar context.
    pub fn uses_context(self) -> bool {
        match self {
            CoreColumn::Te(_, cond) => cond != K::Unconditional,
            CoreColumn::Calendar(_) => true,
            CoreColumn::Static(_) | CoreColumn::Volume(..) => false,
        }
    }
}

/// One column of the travel-time feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendedColumn {
    Te(Conditioning),
    SmoothedTe(Conditioning),
    Calendar(Calendar),
    SuperSegmentId,
    NodeCount,
}

/// The 15 travel-time features in canonical order.
pub const EXTENDED_COLUMNS: [ExtendedColumn; 15] = [
    ExtendedColumn::SmoothedTe(K::SlotDow),
    ExtendedColumn::SuperSegmentId,
    ExtendedColumn::SmoothedTe(K::Slot),
    ExtendedColumn::Calendar(Calendar::Slot),
    ExtendedColumn::Te(K::SlotDow),
    ExtendedColumn::Calendar(Calendar::Month),
    ExtendedColumn::Te(K::Dow),
    ExtendedColumn::Te(K::Slot),
    ExtendedColumn::NodeCount,
    ExtendedColumn::Te(K::Unconditional),
    ExtendedColumn::Calendar(Calendar::Dow),
    ExtendedColumn::Te(K::Weekend),
    ExtendedColumn::Calendar(Calendar::IsWeekend),
    ExtendedColumn::SmoothedTe(K::SlotWeekend),
    ExtendedColumn::Te(K::SlotWeekend),
];

impl ExtendedColumn {
    pub fn name(self) -> String {
        match self {
            ExtendedColumn::Te(K::Unconditional) => "te_unconditional".to_string(),
            ExtendedColumn::Te(cond) => format!("te_{}", cond.suffix()),
            ExtendedColumn::SmoothedTe(cond) => format!("smoothed_te_{}", cond.suffix()),
            ExtendedColumn::Calendar(c) => c.name().to_string(),
            ExtendedColumn::SuperSegmentId => "supersegment_id".to_string(),
            ExtendedColumn::NodeCount => "node_count".to_string(),
        }
    }

    pub fn uses_context(self) -> bool {
        match self {
            ExtendedColumn::Te(cond) | ExtendedColumn::SmoothedTe(cond) => {
                cond != K::Unconditional
            }
            ExtendedColumn::Calendar(_) => true,
            ExtendedColumn::SuperSegmentId | ExtendedColumn::NodeCount => false,
        }
    }
}

pub fn core_feature_names() -> Vec<String> {
    CORE_COLUMNS.iter().map(|c| c.name()).collect()
}

pub fn extended_feature_names() -> Vec<String> {
    EXTENDED_COLUMNS.iter().map(|c| c.name()).collect()
}

/// Names of the congestion columns that depend on the calendar context.
pub fn core_context_columns() -> Vec<String> {
    CORE_COLUMNS
        .iter()
        .filter(|c| c.uses_context())
        .map(|c| c.name())
        .collect()
}

/// Names of the travel-time columns that depend on the calendar context.
pub fn extended_context_columns() -> Vec<String> {
    EXTENDED_COLUMNS
        .iter()
        .filter(|c| c.uses_context())
        .map(|c| c.name())
        .collect()
}

/// Builds congestion feature rows, one per graph edge in graph order.
/// Node degrees are computed once per graph.
#[derive(Debug, Clone)]
pub struct CoreFeatureBuilder<'g> {
    graph: &'g RoadGraph,
    /// (in-degree, out-degree) per node.
    degrees: HashMap<NodeId, (u32, u32)>,
}

impl<'g> CoreFeatureBuilder<'g> {
    pub fn new(graph: &'g RoadGraph) -> Self {
        let mut degrees: HashMap<NodeId, (u32, u32)> = HashMap::new();
        for e in &graph.edges {
            degrees.entry(e.source).or_default().1 += 1;
            degrees.entry(e.sink).or_default().0 += 1;
        }
        Self { graph, degrees }
    }

    pub fn build(
        &self,
        snapshot: &CounterSnapshot,
        context: &TimeContext,
        table: &CcEncodingTable,
        exclude_day: Option<NaiveDate>,
    ) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.graph.edges.len() * CORE_COLUMNS.len());
        self.append_rows(snapshot, context, table, exclude_day, &mut values);
        FeatureMatrix::new(core_feature_names(), values).expect("rows match the column list")
    }

    /// Appends one row per edge to a row-major buffer.
    pub fn append_rows(
        &self,
        snapshot: &CounterSnapshot,
        context: &TimeContext,
        table: &CcEncodingTable,
        exclude_day: Option<NaiveDate>,
        out: &mut Vec<f64>,
    ) {
        for edge in &self.graph.edges {
            let mut te = [[0.0; NUM_CLASSES]; 6];
            for (slot, cond) in te.iter_mut().zip(Conditioning::ALL) {
                *slot = table.lookup(edge.id, cond.key(context), exclude_day);
            }
            let a = &edge.attributes;
            let deg = |n: NodeId| self.degrees.get(&n).copied().unwrap_or_default();
            let volume = |n: NodeId, lag: usize| {
                snapshot
                    .volumes
                    .get(&n)
                    .and_then(|v| v[lag])
                    .unwrap_or(MISSING)
            };
            for col in CORE_COLUMNS {
                out.push(match col {
                    CoreColumn::Te(class, cond) => te[cond as usize][class.index()],
                    CoreColumn::Calendar(c) => c.value(context),
                    CoreColumn::Static(s) => match s {
                        EdgeStatic::HighwayImportance => a.highway_importance,
                        EdgeStatic::Oneway => a.oneway as u8 as f64,
                        EdgeStatic::HighwayClass => a.highway_class as f64,
                        EdgeStatic::Tunnel => a.tunnel as u8 as f64,
                        EdgeStatic::SpeedKph => a.speed_kph,
                        EdgeStatic::MaxSpeed => a.maxspeed,
                        EdgeStatic::CounterDistanceHops => {
                            a.counter_distance_hops.map_or(MISSING, |h| h as f64)
                        }
                        EdgeStatic::Lanes => a.lanes as f64,
                        EdgeStatic::LengthM => a.length_m,
                        EdgeStatic::SourceNodeId => edge.source.0 as f64,
                        EdgeStatic::SinkNodeId => edge.sink.0 as f64,
                        EdgeStatic::EdgeId => edge.id.0 as f64,
                        EdgeStatic::SinkInDegree => deg(edge.sink).0 as f64,
                        EdgeStatic::SourceOutDegree => deg(edge.source).1 as f64,
                        EdgeStatic::SourceInDegree => deg(edge.source).0 as f64,
                        EdgeStatic::SinkOutDegree => deg(edge.sink).1 as f64,
                    },
                    CoreColumn::Volume(Endpoint::Source, lag) => volume(edge.source, lag),
                    CoreColumn::Volume(Endpoint::Sink, lag) => volume(edge.sink, lag),
                });
            }
        }
    }
}

/// Congestion features for every edge of `graph` at `context`. With
/// `exclude_day`, encodings leave that calendar day out.
pub fn build_core_features(
    graph: &RoadGraph,
    snapshot: &CounterSnapshot,
    context: &TimeContext,
    table: &CcEncodingTable,
    exclude_day: Option<NaiveDate>,
) -> FeatureMatrix {
    CoreFeatureBuilder::new(graph).build(snapshot, context, table, exclude_day)
}

/// Appends one travel-time row per super-segment to a row-major buffer.
pub fn append_extended_rows(
    graph: &RoadGraph,
    context: &TimeContext,
    table: &EtaEncodingTable,
    exclude_day: Option<NaiveDate>,
    out: &mut Vec<f64>,
) {
    for ss in &graph.supersegments {
        for col in EXTENDED_COLUMNS {
            out.push(match col {
                ExtendedColumn::Te(cond) => table.lookup(ss.id, cond.key(context), exclude_day),
                ExtendedColumn::SmoothedTe(cond) => {
                    table.smoothed_lookup(ss.id, cond, context, exclude_day)
                }
                ExtendedColumn::Calendar(c) => c.value(context),
                ExtendedColumn::SuperSegmentId => ss.id.0 as f64,
                ExtendedColumn::NodeCount => ss.node_path.len() as f64,
            });
        }
    }
}

/// Travel-time features for every super-segment of `graph` at `context`.
pub fn build_extended_features(
    graph: &RoadGraph,
    context: &TimeContext,
    table: &EtaEncodingTable,
    exclude_day: Option<NaiveDate>,
) -> FeatureMatrix {
    let mut values = Vec::with_capacity(graph.supersegments.len() * EXTENDED_COLUMNS.len());
    append_extended_rows(graph, context, table, exclude_day, &mut values);
    FeatureMatrix::new(extended_feature_names(), values).expect("rows match the column list")
}
