use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_model::{
    counter_hops, CongestionClass, CongestionLabel, CounterSnapshot, Edge, EdgeAttributes, EdgeId,
    EtaLabel, LabeledSnapshot, Node, NodeId, RoadGraph, SnapshotId, SuperSegment, SuperSegmentId,
    TimeContext, DAYS_PER_WEEK, LAGS, SLOTS_PER_DAY,
};
use crate::error::{Error, Result};

/// Parameters of a synthetic city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Nodes are laid out on a grid of this many rows.
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub counters: usize,
    pub supersegments: usize,
    /// Probability that a grid link is two-way.
    pub two_way_prob: f64,
    pub train_days: usize,
    pub test_days: usize,
    pub start_date: NaiveDate,
    /// Counter amplitudes are drawn uniformly from this range.
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// Volume noise standard deviation as a fraction of the expected volume.
    pub noise: f64,
    /// Half-width of each rush-hour peak, in slots.
    pub peak_width: f64,
    /// Fraction of the day over which counter phases are spread; 0 gives
    /// every counter the same profile.
    pub phase_spread: f64,
    /// Monday-first multipliers of traffic volume and congestion demand.
    pub weekday_factors: [f64; DAYS_PER_WEEK],
    /// Probability that a single counter reading is absent.
    pub counter_outage_prob: f64,
    /// Probability that an edge carries a congestion label in a snapshot.
    pub label_coverage: f64,
    /// Probability that a super-segment carries an ETA label in a snapshot.
    pub eta_coverage: f64,
    /// Standard deviation of the latent congestion score.
    pub class_noise: f64,
    pub eta_base_min: f64,
    pub eta_base_max: f64,
    /// Relative amplitude of the daily ETA cycle.
    pub eta_modulation: f64,
    /// ETA noise standard deviation as a fraction of the base travel time.
    pub eta_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            grid_rows: 6,
            grid_cols: 8,
            counters: 16,
            supersegments: 12,
            two_way_prob: 0.1,
            train_days: 70,
            test_days: 7,
            start_date: NaiveDate::from_ymd_opt(2022, 1, 3).expect("valid date"),
            amplitude_min: 50.0,
            amplitude_max: 500.0,
            noise: 0.1,
            peak_width: 12.0,
            phase_spread: 1.0,
            weekday_factors: [1.0, 1.01, 1.02, 1.03, 1.04, 0.9, 0.85],
            counter_outage_prob: 0.0,
            label_coverage: 0.8,
            eta_coverage: 0.9,
            class_noise: 0.12,
            eta_base_min: 60.0,
            eta_base_max: 600.0,
            eta_modulation: 0.5,
            eta_noise: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn nodes(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid_rows < 2 || self.grid_cols < 2 {
            return bad("grid needs at least 2 rows and 2 columns".into());
        }
        if self.counters == 0 || self.counters > self.nodes() {
            return bad(format!("counters = {} must be in 1..={}", self.counters, self.nodes()));
        }
        if self.supersegments == 0 || self.train_days == 0 || self.test_days == 0 {
            return bad("supersegments, train_days and test_days must be positive".into());
        }
        if !(self.amplitude_min > 0.0 && self.amplitude_min <= self.amplitude_max) {
            return bad("amplitude range must be positive and ordered".into());
        }
        if !(self.eta_base_min > 0.0 && self.eta_base_min <= self.eta_base_max) {
            return bad("ETA base range must be positive and ordered".into());
        }
        for (name, v) in [
            ("noise", self.noise),
            ("class_noise", self.class_noise),
            ("eta_noise", self.eta_noise),
            ("eta_modulation", self.eta_modulation),
            ("peak_width", self.peak_width),
            ("phase_spread", self.phase_spread),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        for (name, v) in [
            ("two_way_prob", self.two_way_prob),
            ("counter_outage_prob", self.counter_outage_prob),
            ("label_coverage", self.label_coverage),
            ("eta_coverage", self.eta_coverage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.weekday_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad("weekday factors must be positive".into());
        }
        if self.peak_width == 0.0 {
            return bad("peak_width must be positive".into());
        }
        Ok(())
    }
}

/// A city's road graph with labeled training and test snapshots, ordered by
/// date then slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub city: String,
    pub graph: RoadGraph,
    pub train: Vec<LabeledSnapshot>,
    pub test: Vec<LabeledSnapshot>,
}

fn triangle(slot: f64, center: f64, width: f64) -> f64 {
    let n = SLOTS_PER_DAY as f64;
    let d = (slot - center).rem_euclid(n);
    let d = d.min(n - d);
    (1.0 - d / width).max(0.0)
}

/// Expected relative volume at `slot` of a counter whose profile is shifted
/// by `phase` slots: a morning and an evening peak over a small base level.
pub fn volume_profile(slot: f64, phase: f64, width: f64) -> f64 {
    0.05 + 0.95 * triangle(slot, 32.0 + phase, width) + 0.7 * triangle(slot, 70.0 + phase, width)
}

/// Latent congestion demand of an edge at `slot`, before the weekday factor.
fn demand(slot: f64, shift: f64, width: f64) -> f64 {
    0.05 + 0.95 * triangle(slot, 32.0 + shift, width * 1.5) + 0.8 * triangle(slot, 70.0 + shift, width * 1.5)
}

struct EdgeTruth {
    propensity: f64,
    shift: f64,
}

fn build_graph(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> RoadGraph {
    let (rows, cols) = (spec.grid_rows, spec.grid_cols);
    let id = |r: usize, c: usize| NodeId((r * cols + c) as u64);
    let counters: HashSet<usize> = sample(rng, rows * cols, spec.counters).into_iter().collect();
    let nodes: Vec<Node> = (0..rows * cols)
        .map(|i| Node {
            id: NodeId(i as u64),
            is_counter: counters.contains(&i),
        })
        .collect();

    let mut links = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                links.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                links.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let mut edges = Vec::new();
    for (a, b) in links {
        let two_way = rng.random::<f64>() < spec.two_way_prob;
        let (s, t) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let class: u8 = rng.random_range(1..=6);
        let speed = 20.0 + 15.0 * (6 - class) as f64 + rng.random_range(0.0..10.0);
        let attributes = EdgeAttributes {
            oneway: !two_way,
            tunnel: rng.random::<f64>() < 0.03,
            highway_class: class,
            speed_kph: speed.round(),
            maxspeed: (speed / 10.0).round() * 10.0 + 10.0,
            lanes: rng.random_range(1..=3),
            length_m: rng.random_range(50.0..800.0f64).round(),
            highway_importance: (rng.random::<f64>() * 1000.0).round() / 1000.0,
            counter_distance_hops: None,
        };
        let mut push = |source, sink| {
            edges.push(Edge {
                id: EdgeId(edges.len() as u64),
                source,
                sink,
                attributes: attributes.clone(),
            })
        };
        push(s, t);
        if two_way {
            push(t, s);
        }
    }
    let mut graph = RoadGraph {
        nodes,
        edges,
        supersegments: Vec::new(),
    };
    let hops = counter_hops(&graph);
    for e in &mut graph.edges {
        e.attributes.counter_distance_hops = hops.get(&e.id).copied().flatten();
    }

    let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in &graph.edges {
        out.entry(e.source).or_default().push(e.sink);
    }
    let mut attempts = 0;
    while graph.supersegments.len() < spec.supersegments && attempts < 1000 * spec.supersegments {
        attempts += 1;
        let target_len = rng.random_range(3..=8);
        let mut path = vec![NodeId(rng.random_range(0..(rows * cols) as u64))];
        while path.len() < target_len {
            let last = *path.last().expect("non-empty path");
            let next: Vec<NodeId> = out
                .get(&last)
                .map(|v| v.iter().copied().filter(|n| !path.contains(n)).collect())
                .unwrap_or_default();
            if next.is_empty() {
                break;
            }
            path.push(next[rng.random_range(0..next.len())]);
        }
        if path.len() >= 3 {
            graph.supersegments.push(SuperSegment {
                id: SuperSegmentId(graph.supersegments.len() as u64),
                node_path: path,
            });
        }
    }
    graph
}

/// Generates a city deterministically from `spec.seed`.
pub fn synthesize(spec: &SyntheticSpec, city: &str) -> Result<Dataset> {
    spec.validate()?;
    let stream = |k: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
        r.set_stream(k);
        r
    };
    let mut graph_rng = stream(1);
    let mut volume_rng = stream(2);
    let mut label_rng = stream(3);
    let graph = build_graph(spec, &mut graph_rng);
    if graph.supersegments.len() < spec.supersegments {
        return Err(Error::Config(format!(
            "could only route {} of {} super-segments",
            graph.supersegments.len(),
            spec.supersegments
        )));
    }

    let counters = graph.counter_nodes();
    let n = SLOTS_PER_DAY as f64;
    let phases: Vec<f64> = (0..counters.len())
        .map(|k| (k as f64 * n * spec.phase_spread / counters.len() as f64 + graph_rng.random::<f64>()) % n)
        .collect();
    let amplitudes: Vec<f64> = counters
        .iter()
        .map(|_| graph_rng.random_range(spec.amplitude_min..=spec.amplitude_max))
        .collect();
    let edge_truth: Vec<EdgeTruth> = graph
        .edges
        .iter()
        .map(|_| EdgeTruth {
            propensity: graph_rng.random_range(0.3..1.5),
            shift: graph_rng.random_range(-4.0..4.0),
        })
        .collect();
    let eta_base: Vec<f64> = graph
        .supersegments
        .iter()
        .map(|_| graph_rng.random_range(spec.eta_base_min..=spec.eta_base_max))
        .collect();

    let days = spec.train_days + spec.test_days;
    let dates: Vec<NaiveDate> = (0..days as u64)
        .map(|d| spec.start_date + Days::new(d))
        .collect();
    let dow = |date: NaiveDate| date.weekday().num_days_from_monday() as usize;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    // Volume series per counter, starting one day early so the first
    // snapshot has a full hour of lags.
    let first = spec.start_date - Days::new(1);
    let steps = (days + 1) * SLOTS_PER_DAY;
    let mut series = vec![vec![None; steps]; counters.len()];
    for t in 0..steps {
        let date = first + Days::new((t / SLOTS_PER_DAY) as u64);
        let slot = (t % SLOTS_PER_DAY) as f64;
        let wf = spec.weekday_factors[dow(date)];
        for k in 0..counters.len() {
            let mu = amplitudes[k] * volume_profile(slot, phases[k], spec.peak_width) * wf;
            let v = (mu + spec.noise * mu * std_normal.sample(&mut volume_rng)).max(0.0);
            let out = volume_rng.random::<f64>() < spec.counter_outage_prob;
            series[k][t] = (!out).then_some(v);
        }
    }

    let mut snapshots = Vec::with_capacity(days * SLOTS_PER_DAY);
    for (d, &date) in dates.iter().enumerate() {
        let wf = spec.weekday_factors[dow(date)];
        for slot in 0..SLOTS_PER_DAY {
            let t = (d + 1) * SLOTS_PER_DAY + slot;
            let volumes = counters
                .iter()
                .enumerate()
                .map(|(k, node)| {
                    let mut lags = [None; LAGS];
                    for (j, lag) in lags.iter_mut().enumerate() {
                        *lag = series[k][t - 1 - j];
                    }
                    (*node, lags)
                })
                .collect();
            let id = SnapshotId { date, slot: slot as u16 };
            let context = TimeContext::from_date(date, slot as u16)?;
            let s = slot as f64;
            let mut congestion = Vec::with_capacity(graph.edges.len());
            for (e, truth) in graph.edges.iter().zip(&edge_truth) {
                let score = truth.propensity * demand(s, truth.shift, spec.peak_width) * wf
                    + spec.class_noise * std_normal.sample(&mut label_rng);
                let labeled = label_rng.random::<f64>() < spec.label_coverage;
                let class = if score > 0.75 {
                    CongestionClass::Red
                } else if score > 0.4 {
                    CongestionClass::Yellow
                } else {
                    CongestionClass::Green
                };
                congestion.push(CongestionLabel {
                    edge: e.id,
                    class: labeled.then_some(class),
                });
            }
            let mut etas = Vec::with_capacity(graph.supersegments.len());
            for (ss, base) in graph.supersegments.iter().zip(&eta_base) {
                let eta = base * (1.0 + spec.eta_modulation * (2.0 * PI * s / n).sin())
                    + spec.eta_noise * base * std_normal.sample(&mut label_rng);
                if label_rng.random::<f64>() < spec.eta_coverage {
                    etas.push(EtaLabel {
                        supersegment: ss.id,
                        eta: eta.max(1.0),
                    });
                }
            }
            snapshots.push(LabeledSnapshot {
                snapshot: CounterSnapshot {
                    city: city.to_string(),
                    id,
                    true_context: Some(context),
                    volumes,
                },
                congestion,
                etas,
            });
        }
    }
    let test = snapshots.split_off(spec.train_days * SLOTS_PER_DAY);
    Ok(Dataset {
        city: city.to_string(),
        graph,
        train: snapshots,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::validate_graph;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            train_days: 3,
            test_days: 1,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn generated_graph_is_valid() {
        for seed in 0..5 {
            let d = synthesize(&SyntheticSpec { seed, ..small() }, "x").unwrap();
            assert!(validate_graph(&d.graph).is_empty());
            assert_eq!(d.graph.counter_nodes().len(), 16);
            assert_eq!(d.graph.supersegments.len(), 12);
            assert_eq!(d.train.len(), 3 * 96);
            assert_eq!(d.test.len(), 96);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        assert_eq!(synthesize(&small(), "x").unwrap(), synthesize(&small(), "x").unwrap());
        let other = synthesize(&SyntheticSpec { seed: 1, ..small() }, "x").unwrap();
        assert_ne!(other, synthesize(&small(), "x").unwrap());
    }

    #[test]
    fn lags_are_consecutive_readings() {
        let d = synthesize(&small(), "x").unwrap();
        let node = d.graph.counter_nodes()[0];
        let a = d.train[10].snapshot.volumes[&node];
        let b = d.train[11].snapshot.volumes[&node];
        assert_eq!(b[1], a[0]);
        assert_eq!(b[3], a[2]);
    }

    #[test]
    fn profile_peaks() {
        assert_eq!(volume_profile(32.0, 0.0, 12.0), 1.0);
        assert!((volume_profile(70.0, 0.0, 12.0) - 0.75).abs() < 1e-12);
        assert!((volume_profile(0.0, 0.0, 12.0) - 0.05).abs() < 1e-12);
        assert_eq!(volume_profile(40.0, 8.0, 12.0), 1.0);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        assert!(synthesize(&SyntheticSpec { noise: -1.0, ..small() }, "x").is_err());
        assert!(synthesize(&SyntheticSpec { counters: 0, ..small() }, "x").is_err());
    }
}
