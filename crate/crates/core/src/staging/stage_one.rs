use crate::codec::{Decoder, Encoder};
use crate::data_model::{
    CounterSnapshot, NodeId, RoadGraph, TimeContext, DAYS_PER_WEEK, LAGS, SLOTS_PER_DAY,
};
use crate::error::{Error, Result};
use crate::gbdt::{
    decode_model, encode_model, train_logged, FeatureMatrix, GbdtModel, Objective, Targets,
    TrainLog, MISSING,
};

use super::{EnsembleParams, Schedule};

/// Counter-volume column layout: counters in ascending id order, four lags each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOneLayout {
    counters: Vec<NodeId>,
}

impl StageOneLayout {
    pub fn from_graph(graph: &RoadGraph) -> Self {
        Self {
            counters: graph.counter_nodes(),
        }
    }

    pub fn counters(&self) -> &[NodeId] {
        &self.counters
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.counters
            .iter()
            .flat_map(|n| (1..=LAGS).map(move |l| format!("vol_{n}_lag{}", 15 * l)))
            .collect()
    }

    fn append_row(&self, snapshot: &CounterSnapshot, out: &mut Vec<f64>) -> Result<()> {
        if let Some(stray) = snapshot
            .volumes
            .keys()
            .find(|n| self.counters.binary_search(n).is_err())
        {
            return Err(Error::Layout(format!(
                "snapshot {} has volumes for node {stray}, which is not a counter of this graph",
                snapshot.id
            )));
        }
        for n in &self.counters {
            match snapshot.volumes.get(n) {
                Some(lags) => out.extend(lags.iter().map(|v| v.unwrap_or(MISSING))),
                None => out.extend([MISSING; LAGS]),
            }
        }
        Ok(())
    }

    /// One row per snapshot.
    pub fn features(&self, snapshots: &[CounterSnapshot]) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(snapshots.len() * self.counters.len() * LAGS);
        for s in snapshots {
            self.append_row(s, &mut values)?;
        }
        FeatureMatrix::new(self.feature_names(), values)
    }
}

/// Stage-one feature row of a single snapshot.
pub fn stage1_features(snapshot: &CounterSnapshot, graph: &RoadGraph) -> Result<FeatureMatrix> {
    StageOneLayout::from_graph(graph).features(std::slice::from_ref(snapshot))
}

/// A calendar field predicted by stage one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextTarget {
    Month,
    Dow,
    Slot,
}

impl ContextTarget {
    pub const ALL: [ContextTarget; 3] = [ContextTarget::Month, ContextTarget::Dow, ContextTarget::Slot];

    /// Inclusive valid range.
    pub fn range(self) -> (i64, i64) {
        match self {
            ContextTarget::Month => (1, 12),
            ContextTarget::Dow => (0, DAYS_PER_WEEK as i64 - 1),
            ContextTarget::Slot => (0, SLOTS_PER_DAY as i64 - 1),
        }
    }

    pub fn of(self, c: &TimeContext) -> f64 {
        match self {
            ContextTarget::Month => c.month() as f64,
            ContextTarget::Dow => c.day_of_week() as f64,
            ContextTarget::Slot => c.slot() as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContextTarget::Month => "month",
            ContextTarget::Dow => "dow",
            ContextTarget::Slot => "slot",
        }
    }
}

/// Average of the two member predictions, rounded half away from zero and
/// clamped to the target's range.
pub fn combine_head(a: f64, b: f64, target: ContextTarget) -> i64 {
    let (lo, hi) = target.range();
    (((a + b) / 2.0).round() as i64).clamp(lo, hi)
}

/// Three regression heads (month, day of week, slot), each an average of a
/// preset-A and a preset-B model.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOneModel {
    layout: StageOneLayout,
    /// `heads[t] = [preset A, preset B]` in [`ContextTarget::ALL`] order.
    heads: Vec<[GbdtModel; 2]>,
}

fn contexts_of(snapshots: &[CounterSnapshot]) -> Result<Vec<TimeContext>> {
    snapshots
        .iter()
        .map(|s| {
            s.true_context
                .ok_or_else(|| Error::MissingContext(format!("training snapshot {}", s.id)))
        })
        .collect()
}

/// Fits the six stage-one models with squared error on the raw calendar
/// values. Returns the training logs in member order (month A, month B,
/// dow A, ...).
pub fn train_stage1(
    snapshots: &[CounterSnapshot],
    graph: &RoadGraph,
    params: &EnsembleParams,
    schedule: Schedule<'_, [CounterSnapshot]>,
) -> Result<(StageOneModel, Vec<TrainLog>)> {
    let layout = StageOneLayout::from_graph(graph);
    let x = layout.features(snapshots)?;
    let contexts = contexts_of(snapshots)?;
    let validation = match schedule {
        Schedule::EarlyStopping(v) => Some((layout.features(v)?, contexts_of(v)?)),
        _ => None,
    };
    let mut heads = Vec::with_capacity(3);
    let mut logs = Vec::with_capacity(6);
    for (t, target) in ContextTarget::ALL.into_iter().enumerate() {
        let y = Targets::Real(contexts.iter().map(|c| target.of(c)).collect());
        let vy = validation
            .as_ref()
            .map(|(vx, vc)| (vx, Targets::Real(vc.iter().map(|c| target.of(c)).collect())));
        let mut pair = Vec::with_capacity(2);
        for (m, base) in [&params.preset_a, &params.preset_b].into_iter().enumerate() {
            let p = schedule.member_params(base, 2 * t + m)?;
            let (model, log) = train_logged(
                &x,
                &y,
                &Objective::squared_error(),
                &p,
                vy.as_ref().map(|(vx, vy)| (*vx, vy)),
            )?;
            pair.push(model);
            logs.push(log);
        }
        let [a, b]: [GbdtModel; 2] = pair.try_into().expect("two members");
        heads.push([a, b]);
    }
    Ok((StageOneModel { layout, heads }, logs))
}

impl StageOneModel {
    pub fn layout(&self) -> &StageOneLayout {
        &self.layout
    }

    /// Members in training order (month A, month B, dow A, dow B, slot A, slot B).
    pub fn members(&self) -> impl Iterator<Item = &GbdtModel> {
        self.heads.iter().flat_map(|h| h.iter())
    }

    pub fn best_rounds(&self) -> Vec<usize> {
        self.members().map(GbdtModel::best_round).collect()
    }

    /// Predicted contexts for many snapshots.
    pub fn predict_contexts(&self, snapshots: &[CounterSnapshot]) -> Result<Vec<TimeContext>> {
        let x = self.layout.features(snapshots)?;
        let mut fields = Vec::with_capacity(3);
        for (head, target) in self.heads.iter().zip(ContextTarget::ALL) {
            let a = head[0].predict(&x)?;
            let b = head[1].predict(&x)?;
            fields.push(
                a.iter()
                    .zip(&b)
                    .map(|(p, q)| combine_head(*p, *q, target))
                    .collect::<Vec<_>>(),
            );
        }
        (0..snapshots.len())
            .map(|i| TimeContext::new(fields[0][i] as u8, fields[1][i] as u8, fields[2][i] as u16))
            .collect()
    }

    pub fn predict_context(&self, snapshot: &CounterSnapshot) -> Result<TimeContext> {
        Ok(self.predict_contexts(std::slice::from_ref(snapshot))?[0])
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        enc.put_len(self.layout.counters.len());
        for n in &self.layout.counters {
            enc.put_u64(n.0);
        }
        for m in self.members() {
            encode_model(m, enc);
        }
    }

    pub(crate) fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let n = dec.get_len(8)?;
        let counters = (0..n).map(|_| dec.get_u64().map(NodeId)).collect::<Result<Vec<_>>>()?;
        let layout = StageOneLayout { counters };
        let names = layout.feature_names();
        let mut heads = Vec::with_capacity(3);
        for _ in 0..3 {
            let a = decode_model(dec)?;
            let b = decode_model(dec)?;
            if a.feature_names() != names.as_slice() || b.feature_names() != names.as_slice() {
                return Err(Error::Malformed("stage-one model columns differ from its layout".into()));
            }
            heads.push([a, b]);
        }
        Ok(Self { layout, heads })
    }
}

/// Predicted context of one snapshot.
pub fn predict_context(model: &StageOneModel, snapshot: &CounterSnapshot) -> Result<TimeContext> {
    model.predict_context(snapshot)
}
