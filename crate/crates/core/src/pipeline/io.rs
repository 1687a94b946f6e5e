use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data_model::{
    validate_graph, CongestionClass, CongestionLabel, CounterSnapshot, Edge, EdgeAttributes,
    EdgeId, EtaLabel, LabeledSnapshot, Node, NodeId, RoadGraph, SnapshotId, SuperSegment,
    SuperSegmentId, TimeContext, LAGS, SLOTS_PER_DAY,
};
use crate::error::{Error, Result};

use super::synth::Dataset;

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const SUPERSEGMENTS_FILE: &str = "supersegments.csv";
pub const CORE_LABELS_FILE: &str = "core_labels.csv";
pub const ETA_LABELS_FILE: &str = "eta_labels.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const TRAIN_DIR: &str = "train";
pub const TEST_DIR: &str = "test";

/// Writes `path` through a temporary file in the same directory that is
/// renamed into place once `fill` succeeds.
pub fn atomic_write(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Serializes `rows` as a headed CSV file, atomically.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    atomic_write(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r).map_err(std::io::Error::other)?;
        }
        csv.flush()
    })
}

fn ingest_error(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Ingest {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads every row of a headed CSV file with its 1-based line number.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let csv_error = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(io) => Error::io(path, std::io::Error::new(io.kind(), io.to_string())),
        _ => ingest_error(path, e.position().map_or(0, |p| p.line()), e.to_string()),
    };
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut record = csv::StringRecord::new();
    let mut out = Vec::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| ingest_error(path, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: u64,
    is_counter: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    id: u64,
    source: u64,
    sink: u64,
    oneway: bool,
    tunnel: bool,
    highway_class: u8,
    speed_kph: f64,
    maxspeed: f64,
    lanes: u32,
    length_m: f64,
    highway_importance: f64,
    counter_distance_hops: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SuperSegmentRow {
    id: u64,
    node_path: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoreLabelRow {
    date: NaiveDate,
    slot: u16,
    edge_id: u64,
    class: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EtaLabelRow {
    date: NaiveDate,
    slot: u16,
    supersegment_id: u64,
    eta_seconds: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotRow {
    date: NaiveDate,
    slot: u16,
    node_id: u64,
    lag15: Option<f64>,
    lag30: Option<f64>,
    lag45: Option<f64>,
    lag60: Option<f64>,
}

pub fn write_graph(dir: &Path, graph: &RoadGraph) -> Result<()> {
    write_csv(
        &dir.join(NODES_FILE),
        graph.nodes.iter().map(|n| NodeRow {
            id: n.id.0,
            is_counter: n.is_counter,
        }),
    )?;
    write_csv(
        &dir.join(EDGES_FILE),
        graph.edges.iter().map(|e| {
            let a = &e.attributes;
            EdgeRow {
                id: e.id.0,
                source: e.source.0,
                sink: e.sink.0,
                oneway: a.oneway,
                tunnel: a.tunnel,
                highway_class: a.highway_class,
                speed_kph: a.speed_kph,
                maxspeed: a.maxspeed,
                lanes: a.lanes,
                length_m: a.length_m,
                highway_importance: a.highway_importance,
                counter_distance_hops: a.counter_distance_hops,
            }
        }),
    )?;
    write_csv(
        &dir.join(SUPERSEGMENTS_FILE),
        graph.supersegments.iter().map(|s| SuperSegmentRow {
            id: s.id.0,
            node_path: s.node_path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "),
        }),
    )
}

/// Writes labels and snapshots of one split into `dir`.
pub fn write_split(dir: &Path, snapshots: &[LabeledSnapshot]) -> Result<()> {
    write_csv(
        &dir.join(SNAPSHOTS_FILE),
        snapshots.iter().flat_map(|s| {
            let id = s.snapshot.id;
            s.snapshot.volumes.iter().map(move |(n, v)| SnapshotRow {
                date: id.date,
                slot: id.slot,
                node_id: n.0,
                lag15: v[0],
                lag30: v[1],
                lag45: v[2],
                lag60: v[3],
            })
        }),
    )?;
    write_csv(
        &dir.join(CORE_LABELS_FILE),
        snapshots.iter().flat_map(|s| {
            let id = s.snapshot.id;
            s.congestion.iter().map(move |l| CoreLabelRow {
                date: id.date,
                slot: id.slot,
                edge_id: l.edge.0,
                class: l.class.map_or("ignore", CongestionClass::name).to_string(),
            })
        }),
    )?;
    write_csv(
        &dir.join(ETA_LABELS_FILE),
        snapshots.iter().flat_map(|s| {
            let id = s.snapshot.id;
            s.etas.iter().map(move |l| EtaLabelRow {
                date: id.date,
                slot: id.slot,
                supersegment_id: l.supersegment.0,
                eta_seconds: l.eta,
            })
        }),
    )
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    write_graph(dir, &dataset.graph)?;
    write_split(&dir.join(TRAIN_DIR), &dataset.train)?;
    write_split(&dir.join(TEST_DIR), &dataset.test)
}

pub fn read_graph(dir: &Path) -> Result<RoadGraph> {
    let nodes_path = dir.join(NODES_FILE);
    let nodes = read_csv::<NodeRow>(&nodes_path)?
        .into_iter()
        .map(|(_, r)| Node {
            id: NodeId(r.id),
            is_counter: r.is_counter,
        })
        .collect();
    let edges = read_csv::<EdgeRow>(&dir.join(EDGES_FILE))?
        .into_iter()
        .map(|(_, r)| Edge {
            id: EdgeId(r.id),
            source: NodeId(r.source),
            sink: NodeId(r.sink),
            attributes: EdgeAttributes {
                oneway: r.oneway,
                tunnel: r.tunnel,
                highway_class: r.highway_class,
                speed_kph: r.speed_kph,
                maxspeed: r.maxspeed,
                lanes: r.lanes,
                length_m: r.length_m,
                highway_importance: r.highway_importance,
                counter_distance_hops: r.counter_distance_hops,
            },
        })
        .collect();
    let ss_path = dir.join(SUPERSEGMENTS_FILE);
    let mut supersegments = Vec::new();
    for (line, r) in read_csv::<SuperSegmentRow>(&ss_path)? {
        let node_path = r
            .node_path
            .split_whitespace()
            .map(|t| t.parse::<u64>().map(NodeId))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| ingest_error(&ss_path, line, format!("node_path: {e}")))?;
        supersegments.push(SuperSegment {
            id: SuperSegmentId(r.id),
            node_path,
        });
    }
    let graph = RoadGraph {
        nodes,
        edges,
        supersegments,
    };
    let violations = validate_graph(&graph);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidGraph {
            count: violations.len(),
            first: first.to_string(),
        });
    }
    Ok(graph)
}

fn snapshot_id(file: &Path, line: u64, date: NaiveDate, slot: u16) -> Result<SnapshotId> {
    if slot as usize >= SLOTS_PER_DAY {
        return Err(ingest_error(file, line, format!("slot {slot} outside 0..=95")));
    }
    Ok(SnapshotId { date, slot })
}

/// Label files may be absent, as for snapshots awaiting prediction.
fn read_labels<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    if path.exists() {
        read_csv(path)
    } else {
        Ok(Vec::new())
    }
}

/// Reads one split, checked against `graph`. Snapshots come out ordered by
/// date and slot; labels keep their file order.
pub fn read_split(dir: &Path, graph: &RoadGraph, city: &str) -> Result<Vec<LabeledSnapshot>> {
    let counters: HashSet<NodeId> = graph.counter_nodes().into_iter().collect();
    let edges: HashSet<EdgeId> = graph.edges.iter().map(|e| e.id).collect();
    let supersegments: HashSet<SuperSegmentId> = graph.supersegments.iter().map(|s| s.id).collect();

    let mut snapshots: BTreeMap<SnapshotId, LabeledSnapshot> = BTreeMap::new();
    let path = dir.join(SNAPSHOTS_FILE);
    for (line, r) in read_csv::<SnapshotRow>(&path)? {
        let id = snapshot_id(&path, line, r.date, r.slot)?;
        let node = NodeId(r.node_id);
        if !counters.contains(&node) {
            return Err(ingest_error(&path, line, format!("node {node} is not a counter of the graph")));
        }
        let lags: [Option<f64>; LAGS] = [r.lag15, r.lag30, r.lag45, r.lag60];
        if lags.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ingest_error(&path, line, "volumes must be finite and non-negative"));
        }
        let entry = snapshots.entry(id).or_insert_with(|| LabeledSnapshot {
            snapshot: CounterSnapshot {
                city: city.to_string(),
                id,
                true_context: TimeContext::from_date(id.date, id.slot).ok(),
                volumes: BTreeMap::new(),
            },
            congestion: Vec::new(),
            etas: Vec::new(),
        });
        if entry.snapshot.volumes.insert(node, lags).is_some() {
            return Err(ingest_error(&path, line, format!("duplicate reading for node {node} at {id}")));
        }
    }

    let path = dir.join(CORE_LABELS_FILE);
    let mut seen: HashSet<(SnapshotId, EdgeId)> = HashSet::new();
    for (line, r) in read_labels::<CoreLabelRow>(&path)? {
        let id = snapshot_id(&path, line, r.date, r.slot)?;
        let edge = EdgeId(r.edge_id);
        if !edges.contains(&edge) {
            return Err(ingest_error(&path, line, format!("unknown edge {edge}")));
        }
        let class = match r.class.as_str() {
            "ignore" => None,
            other => Some(other.parse::<CongestionClass>().map_err(|e| ingest_error(&path, line, e))?),
        };
        if !seen.insert((id, edge)) {
            return Err(ingest_error(&path, line, format!("duplicate label for edge {edge} at {id}")));
        }
        let s = snapshots
            .get_mut(&id)
            .ok_or_else(|| ingest_error(&path, line, format!("no snapshot {id}")))?;
        s.congestion.push(CongestionLabel { edge, class });
    }

    let path = dir.join(ETA_LABELS_FILE);
    let mut seen: HashSet<(SnapshotId, SuperSegmentId)> = HashSet::new();
    for (line, r) in read_labels::<EtaLabelRow>(&path)? {
        let id = snapshot_id(&path, line, r.date, r.slot)?;
        let ss = SuperSegmentId(r.supersegment_id);
        if !supersegments.contains(&ss) {
            return Err(ingest_error(&path, line, format!("unknown supersegment {ss}")));
        }
        if !(r.eta_seconds.is_finite() && r.eta_seconds > 0.0) {
            return Err(ingest_error(&path, line, format!("ETA {} must be positive", r.eta_seconds)));
        }
        if !seen.insert((id, ss)) {
            return Err(ingest_error(&path, line, format!("duplicate ETA for supersegment {ss} at {id}")));
        }
        let s = snapshots
            .get_mut(&id)
            .ok_or_else(|| ingest_error(&path, line, format!("no snapshot {id}")))?;
        s.etas.push(EtaLabel {
            supersegment: ss,
            eta: r.eta_seconds,
        });
    }
    Ok(snapshots.into_values().collect())
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn ingest(dir: &Path, city: &str) -> Result<Dataset> {
    let graph = read_graph(dir)?;
    let train = read_split(&dir.join(TRAIN_DIR), &graph, city)?;
    let test = read_split(&dir.join(TEST_DIR), &graph, city)?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training snapshots"));
    }
    Ok(Dataset {
        city: city.to_string(),
        graph,
        train,
        test,
    })
}

/// Per-edge output row of the congestion predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePredictionRow {
    pub snapshot_id: String,
    pub edge_id: u64,
    pub p_red: f64,
    pub p_yellow: f64,
    pub p_green: f64,
    pub argmax: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPredictionRow {
    pub snapshot_id: String,
    pub supersegment_id: u64,
    pub eta_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRow {
    pub snapshot_id: String,
    pub month: u8,
    pub day_of_week: u8,
    pub slot: u16,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{synthesize, SyntheticSpec};

    fn small() -> Dataset {
        synthesize(
            &SyntheticSpec {
                train_days: 2,
                test_days: 1,
                counter_outage_prob: 0.05,
                ..SyntheticSpec::default()
            },
            "town",
        )
        .unwrap()
    }

    #[test]
    fn dataset_round_trips() {
        let d = small();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        assert_eq!(ingest(dir.path(), "town").unwrap(), d);
    }

    #[test]
    fn unknown_edge_names_file_and_line() {
        let d = small();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let path = dir.path().join(TRAIN_DIR).join(CORE_LABELS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("2022-01-03,5,99999,red\n");
        let lines = text.lines().count() as u64;
        fs::write(&path, text).unwrap();
        match ingest(dir.path(), "town") {
            Err(Error::Ingest { file, line, message }) => {
                assert_eq!(file, path);
                assert_eq!(line, lines);
                assert!(message.contains("99999"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_label_is_rejected() {
        let d = small();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let path = dir.path().join(TRAIN_DIR).join(CORE_LABELS_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let second = text.lines().nth(1).unwrap().to_string();
        fs::write(&path, format!("{text}{second}\n")).unwrap();
        let err = ingest(dir.path(), "town").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn broken_graph_reports_validation_failures() {
        let d = small();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let path = dir.path().join(EDGES_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("5000,0,777,true,false,1,50,60,1,100,0.5,\n");
        fs::write(&path, text).unwrap();
        let err = ingest(dir.path(), "town").unwrap_err();
        assert!(matches!(err, Error::InvalidGraph { count: 1, .. }), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let d = small();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let path = dir.path().join(TRAIN_DIR).join(ETA_LABELS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("2022-01-03,5,1,fast\n");
        let lines = text.lines().count() as u64;
        fs::write(&path, text).unwrap();
        match ingest(dir.path(), "town") {
            Err(Error::Ingest { line, .. }) => assert_eq!(line, lines),
            other => panic!("unexpected {other:?}"),
        }
    }
}
