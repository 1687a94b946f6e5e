use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuperSegmentId(pub u64);

macro_rules! display_id {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    )*};
}
display_id!(NodeId, EdgeId, SuperSegmentId);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub is_counter: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttributes {
    pub oneway: bool,
    pub tunnel: bool,
    /// Numeric mapping of the OSM highway class.
    pub highway_class: u8,
    pub speed_kph: f64,
    pub maxspeed: f64,
    pub lanes: u32,
    pub length_m: f64,
    /// Opaque importance score supplied with the input data.
    pub highway_importance: f64,
    /// `None` only when no counter is reachable.
    pub counter_distance_hops: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub source: NodeId,
    pub sink: NodeId,
    pub attributes: EdgeAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperSegment {
    pub id: SuperSegmentId,
    pub node_path: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoadGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub supersegments: Vec<SuperSegment>,
}

impl RoadGraph {
    /// Counter node ids in ascending order.
    pub fn counter_nodes(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.is_counter)
            .map(|n| n.id)
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn is_counter(&self, id: NodeId) -> bool {
        self.nodes.iter().any(|n| n.id == id && n.is_counter)
    }
}

/// One broken [`RoadGraph`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNode(NodeId),
    DuplicateEdge(EdgeId),
    DuplicateSuperSegment(SuperSegmentId),
    UnknownSource { edge: EdgeId, node: NodeId },
    UnknownSink { edge: EdgeId, node: NodeId },
    NegativeAttribute { edge: EdgeId, attribute: &'static str },
    ShortSuperSegment(SuperSegmentId),
    UnknownPathNode { supersegment: SuperSegmentId, node: NodeId },
    MissingPathEdge {
        supersegment: SuperSegmentId,
        from: NodeId,
        to: NodeId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode(n) => write!(f, "node {n} is declared more than once"),
            Violation::DuplicateEdge(e) => write!(f, "edge {e} is declared more than once"),
            Violation::DuplicateSuperSegment(s) => {
                write!(f, "supersegment {s} is declared more than once")
            }
            Violation::UnknownSource { edge, node } => {
                write!(f, "edge {edge} has unknown source node {node}")
            }
            Violation::UnknownSink { edge, node } => {
                write!(f, "edge {edge} has unknown sink node {node}")
            }
            Violation::NegativeAttribute { edge, attribute } => {
                write!(f, "edge {edge} has negative or non-finite {attribute}")
            }
            Violation::ShortSuperSegment(s) => {
                write!(f, "supersegment {s} has fewer than 2 nodes")
            }
            Violation::UnknownPathNode { supersegment, node } => {
                write!(f, "supersegment {supersegment} visits unknown node {node}")
            }
            Violation::MissingPathEdge {
                supersegment,
                from,
                to,
            } => write!(f, "supersegment {supersegment} steps {from} -> {to} without an edge"),
        }
    }
}

/// Lists every broken invariant; an empty list means the graph is valid.
pub fn validate_graph(graph: &RoadGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut node_ids = HashSet::with_capacity(graph.nodes.len());
    for n in &graph.nodes {
        if !node_ids.insert(n.id) {
            out.push(Violation::DuplicateNode(n.id));
        }
    }

    let mut edge_ids = HashSet::with_capacity(graph.edges.len());
    let mut pairs = HashSet::with_capacity(graph.edges.len());
    for e in &graph.edges {
        if !edge_ids.insert(e.id) {
            out.push(Violation::DuplicateEdge(e.id));
        }
        if !node_ids.contains(&e.source) {
            out.push(Violation::UnknownSource {
                edge: e.id,
                node: e.source,
            });
        }
        if !node_ids.contains(&e.sink) {
            out.push(Violation::UnknownSink {
                edge: e.id,
                node: e.sink,
            });
        }
        let a = &e.attributes;
        for (name, v) in [
            ("speed_kph", a.speed_kph),
            ("maxspeed", a.maxspeed),
            ("length_m", a.length_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::NegativeAttribute {
                    edge: e.id,
                    attribute: name,
                });
            }
        }
        pairs.insert((e.source, e.sink));
    }

    let mut ss_ids = HashSet::with_capacity(graph.supersegments.len());
    for s in &graph.supersegments {
        if !ss_ids.insert(s.id) {
            out.push(Violation::DuplicateSuperSegment(s.id));
        }
        if s.node_path.len() < 2 {
            out.push(Violation::ShortSuperSegment(s.id));
            continue;
        }
        for n in &s.node_path {
            if !node_ids.contains(n) {
                out.push(Violation::UnknownPathNode {
                    supersegment: s.id,
                    node: *n,
                });
            }
        }
        for w in s.node_path.windows(2) {
            if !pairs.contains(&(w[0], w[1])) {
                out.push(Violation::MissingPathEdge {
                    supersegment: s.id,
                    from: w[0],
                    to: w[1],
                });
            }
        }
    }
    out
}

/// Hop distance from each edge to the nearest counter node, treating the
/// road graph as undirected. An edge's distance is the smaller of its
/// endpoints' distances.
pub fn counter_hops(graph: &RoadGraph) -> HashMap<EdgeId, Option<u32>> {
    let mut adjacency: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in &graph.edges {
        adjacency.entry(e.source).or_default().push(e.sink);
        adjacency.entry(e.sink).or_default().push(e.source);
    }
    let mut dist: HashMap<NodeId, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    for id in graph.counter_nodes() {
        dist.insert(id, 0);
        queue.push_back(id);
    }
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        for &m in adjacency.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::hash_map::Entry::Vacant(v) = dist.entry(m) {
                v.insert(d + 1);
                queue.push_back(m);
            }
        }
    }
    graph
        .edges
        .iter()
        .map(|e| {
            let d = match (dist.get(&e.source), dist.get(&e.sink)) {
                (Some(a), Some(b)) => Some(*a.min(b)),
                (Some(a), None) | (None, Some(a)) => Some(*a),
                (None, None) => None,
            };
            (e.id, d)
        })
        .collect()
}
