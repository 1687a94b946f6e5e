use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{Decoder, Encoder};
use crate::data_model::{
    CounterSnapshot, EdgeId, LabeledSnapshot, RoadGraph, SuperSegmentId, TimeContext, NUM_CLASSES,
};
use crate::encoding::{
    append_extended_rows, core_context_columns, core_feature_names, extended_context_columns,
    extended_feature_names, fit_cc_encoding, fit_eta_encoding, CcEncodingTable, CcObservation,
    Conditioning, CoreFeatureBuilder, EtaEncodingTable, EtaObservation, DEFAULT_PSEUDOCOUNT,
};
use crate::error::{Error, Result};
use crate::gbdt::{
    class_weights, decode_model, encode_model, train_logged, FeatureMatrix, GbdtModel, Objective,
    Targets, TrainLog, DEFAULT_EPSILON,
};

use super::{EnsembleParams, Schedule};

/// Which columns the stage-two models see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    Full,
    /// Every column that depends on the calendar context is dropped.
    ContextFree,
}

impl FeatureSet {
    fn tag(self) -> u8 {
        match self {
            FeatureSet::Full => 0,
            FeatureSet::ContextFree => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(FeatureSet::Full),
            1 => Some(FeatureSet::ContextFree),
            _ => None,
        }
    }

    fn columns(self, all: Vec<String>, context: &[String]) -> Vec<String> {
        match self {
            FeatureSet::Full => all,
            FeatureSet::ContextFree => all.into_iter().filter(|c| !context.contains(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTwoOptions {
    pub params: EnsembleParams,
    pub pseudocount: f64,
    pub epsilon: f64,
    pub feature_set: FeatureSet,
    /// Snapshots per day that become training rows; 0 keeps every snapshot.
    pub rows_per_day: usize,
    /// Seed of the per-day row selection.
    pub seed: u64,
}

impl Default for StageTwoOptions {
    fn default() -> Self {
        Self {
            params: EnsembleParams::default(),
            pseudocount: DEFAULT_PSEUDOCOUNT,
            epsilon: DEFAULT_EPSILON,
            feature_set: FeatureSet::Full,
            rows_per_day: 0,
            seed: 0,
        }
    }
}

/// Encoding tables plus the congestion ensemble (presets A and B) and the
/// travel-time model (preset B, absolute error).
#[derive(Debug, Clone, PartialEq)]
pub struct StageTwoModel {
    feature_set: FeatureSet,
    cc: CcEncodingTable,
    eta: EtaEncodingTable,
    core: [GbdtModel; 2],
    extended: GbdtModel,
}

/// Per-edge class probabilities (graph edge order) and per-super-segment
/// travel times (graph super-segment order).
#[derive(Debug, Clone, PartialEq)]
pub struct StageTwoPrediction {
    pub probabilities: Vec<[f64; NUM_CLASSES]>,
    pub etas: Vec<f64>,
}

/// The context handed to stage two at inference.
#[derive(Debug, Clone, Copy)]
pub enum ContextInput<'a> {
    Known(&'a TimeContext),
    /// Context-dependent columns are set to missing.
    Nulled,
}

fn true_context(s: &LabeledSnapshot) -> Result<TimeContext> {
    s.snapshot
        .true_context
        .ok_or_else(|| Error::MissingContext(format!("labeled snapshot {}", s.snapshot.id)))
}

fn fit_tables(labeled: &[LabeledSnapshot], pseudocount: f64) -> Result<(CcEncodingTable, EtaEncodingTable)> {
    let mut cc = Vec::new();
    let mut eta = Vec::new();
    for s in labeled {
        let context = true_context(s)?;
        let date = s.date();
        cc.extend(s.congestion.iter().map(|&label| CcObservation { date, context, label }));
        eta.extend(s.etas.iter().map(|&label| EtaObservation { date, context, label }));
    }
    Ok((fit_cc_encoding(&cc, pseudocount)?, fit_eta_encoding(&eta)?))
}

/// Up to `per_day` snapshots of every day, in input order.
fn select_rows(labeled: &[LabeledSnapshot], per_day: usize, seed: u64) -> Vec<usize> {
    if per_day == 0 {
        return (0..labeled.len()).collect();
    }
    let mut by_day: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    for (i, s) in labeled.iter().enumerate() {
        by_day.entry(s.date()).or_default().push(i);
    }
    let mut picked = Vec::new();
    for (day, idx) in by_day {
        if idx.len() <= per_day {
            picked.extend(idx);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (day.num_days_from_ce() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        picked.extend(sample(&mut rng, idx.len(), per_day).into_iter().map(|k| idx[k]));
    }
    picked.sort_unstable();
    picked
}

struct Rows {
    core: FeatureMatrix,
    core_y: Vec<Option<usize>>,
    extended: FeatureMatrix,
    extended_y: Vec<f64>,
}

/// Feature rows of `rows`, with encodings looked up at the true context.
/// `leave_day_out` excludes each row's own day from its encodings.
fn build_rows(
    graph: &RoadGraph,
    labeled: &[LabeledSnapshot],
    rows: &[usize],
    tables: (&CcEncodingTable, &EtaEncodingTable),
    leave_day_out: bool,
    feature_set: FeatureSet,
) -> Result<Rows> {
    let builder = CoreFeatureBuilder::new(graph);
    let n_ext = extended_feature_names().len();
    let mut core = Vec::new();
    let mut core_y = Vec::new();
    let mut extended = Vec::new();
    let mut extended_y = Vec::new();
    let mut ext_buf = Vec::new();
    for &i in rows {
        let s = &labeled[i];
        let context = true_context(s)?;
        let exclude = leave_day_out.then(|| s.date());
        builder.append_rows(&s.snapshot, &context, tables.0, exclude, &mut core);
        let classes: HashMap<EdgeId, usize> = s
            .congestion
            .iter()
            .filter_map(|l| l.class.map(|c| (l.edge, c.index())))
            .collect();
        core_y.extend(graph.edges.iter().map(|e| classes.get(&e.id).copied()));

        let etas: HashMap<SuperSegmentId, f64> = s.etas.iter().map(|l| (l.supersegment, l.eta)).collect();
        ext_buf.clear();
        append_extended_rows(graph, &context, tables.1, exclude, &mut ext_buf);
        for (ss, row) in graph.supersegments.iter().zip(ext_buf.chunks(n_ext)) {
            if let Some(&eta) = etas.get(&ss.id) {
                extended.extend_from_slice(row);
                extended_y.push(eta);
            }
        }
    }
    let core = restrict(FeatureMatrix::new(core_feature_names(), core)?, feature_set, &core_context_columns())?;
    let extended = restrict(
        FeatureMatrix::new(extended_feature_names(), extended)?,
        feature_set,
        &extended_context_columns(),
    )?;
    Ok(Rows { core, core_y, extended, extended_y })
}

fn restrict(x: FeatureMatrix, feature_set: FeatureSet, context: &[String]) -> Result<FeatureMatrix> {
    match feature_set {
        FeatureSet::Full => Ok(x),
        FeatureSet::ContextFree => {
            let keep = feature_set.columns(x.column_names().to_vec(), context);
            let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
            x.select_columns(&keep)
        }
    }
}

/// Fits the encoding tables on every label of `labeled`, then trains the
/// congestion pair and the travel-time model on the selected rows with
/// leave-one-day-out encodings at the true context.
///
/// Members are ordered core A, core B, travel time; the logs follow that order.
pub fn train_stage2(
    graph: &RoadGraph,
    labeled: &[LabeledSnapshot],
    options: &StageTwoOptions,
    schedule: Schedule<'_, [LabeledSnapshot]>,
) -> Result<(StageTwoModel, Vec<TrainLog>)> {
    let (cc, eta) = fit_tables(labeled, options.pseudocount)?;
    let rows = select_rows(labeled, options.rows_per_day, options.seed);
    let train = build_rows(graph, labeled, &rows, (&cc, &eta), true, options.feature_set)?;
    let valid = match schedule {
        Schedule::EarlyStopping(v) => {
            let vrows = select_rows(v, options.rows_per_day, options.seed);
            Some(build_rows(graph, v, &vrows, (&cc, &eta), false, options.feature_set)?)
        }
        _ => None,
    };

    let weights = class_weights(&train.core_y, NUM_CLASSES)?;
    let softmax = Objective::masked_softmax(weights, options.epsilon)?;
    let core_y = Targets::Classes(train.core_y);
    let valid_core = valid.as_ref().map(|v| (&v.core, Targets::Classes(v.core_y.clone())));
    let mut logs = Vec::with_capacity(3);
    let mut core = Vec::with_capacity(2);
    for (m, base) in [&options.params.preset_a, &options.params.preset_b].into_iter().enumerate() {
        let p = schedule.member_params(base, m)?;
        let (model, log) = train_logged(
            &train.core,
            &core_y,
            &softmax,
            &p,
            valid_core.as_ref().map(|(x, y)| (*x, y)),
        )?;
        core.push(model);
        logs.push(log);
    }

    let ext_y = Targets::Real(train.extended_y);
    let valid_ext = valid.as_ref().map(|v| (&v.extended, Targets::Real(v.extended_y.clone())));
    let p = schedule.member_params(&options.params.preset_b, 2)?;
    let (extended, log) = train_logged(
        &train.extended,
        &ext_y,
        &Objective::absolute_error(),
        &p,
        valid_ext.as_ref().map(|(x, y)| (*x, y)),
    )?;
    logs.push(log);

    let [a, b]: [GbdtModel; 2] = core.try_into().expect("two members");
    Ok((
        StageTwoModel {
            feature_set: options.feature_set,
            cc,
            eta,
            core: [a, b],
            extended,
        },
        logs,
    ))
}

/// Placeholder context for building rows whose context columns are discarded.
fn placeholder() -> TimeContext {
    TimeContext::new(1, 0, 0).expect("valid context")
}

impl StageTwoModel {
    pub fn feature_set(&self) -> FeatureSet {
        self.feature_set
    }

    pub fn cc_table(&self) -> &CcEncodingTable {
        &self.cc
    }

    pub fn eta_table(&self) -> &EtaEncodingTable {
        &self.eta
    }

    /// Members in training order (core A, core B, travel time).
    pub fn members(&self) -> impl Iterator<Item = &GbdtModel> {
        self.core.iter().chain(std::iter::once(&self.extended))
    }

    pub fn best_rounds(&self) -> Vec<usize> {
        self.members().map(GbdtModel::best_round).collect()
    }

    /// Class weights the congestion members were trained with.
    pub fn class_weights(&self) -> &[f64] {
        self.core[0].objective().class_weights()
    }

    pub fn predict(
        &self,
        graph: &RoadGraph,
        snapshot: &CounterSnapshot,
        context: ContextInput<'_>,
    ) -> Result<StageTwoPrediction> {
        let ctx = match context {
            ContextInput::Known(c) => *c,
            ContextInput::Nulled => placeholder(),
        };
        let core = CoreFeatureBuilder::new(graph).build(snapshot, &ctx, &self.cc, None);
        let mut ext = Vec::new();
        append_extended_rows(graph, &ctx, &self.eta, None, &mut ext);
        let ext = FeatureMatrix::new(extended_feature_names(), ext)?;
        let (core, ext) = match (self.feature_set, context) {
            (FeatureSet::ContextFree, _) => (
                restrict(core, self.feature_set, &core_context_columns())?,
                restrict(ext, self.feature_set, &extended_context_columns())?,
            ),
            (FeatureSet::Full, ContextInput::Known(_)) => (core, ext),
            (FeatureSet::Full, ContextInput::Nulled) => {
                let cc = core_context_columns();
                let ec = extended_context_columns();
                (
                    core.with_missing_columns(&cc.iter().map(String::as_str).collect::<Vec<_>>())?,
                    ext.with_missing_columns(&ec.iter().map(String::as_str).collect::<Vec<_>>())?,
                )
            }
        };

        let pa = self.core[0].predict(&core)?;
        let pb = self.core[1].predict(&core)?;
        let probabilities = pa
            .chunks(NUM_CLASSES)
            .zip(pb.chunks(NUM_CLASSES))
            .map(|(a, b)| {
                let mut p = [0.0; NUM_CLASSES];
                for k in 0..NUM_CLASSES {
                    p[k] = (a[k] + b[k]) / 2.0;
                }
                let s: f64 = p.iter().sum();
                p.map(|v| v / s)
            })
            .collect();
        let etas = self.extended.predict(&ext)?.into_iter().map(|v| v.max(1.0)).collect();
        Ok(StageTwoPrediction { probabilities, etas })
    }

    /// Encoding-only predictions at `context`: the slot-and-weekend class
    /// frequencies and mean travel times of the fitted tables.
    pub fn te_baseline(&self, graph: &RoadGraph, context: &TimeContext) -> StageTwoPrediction {
        let cond = Conditioning::SlotWeekend;
        let key = cond.key(context);
        StageTwoPrediction {
            probabilities: graph.edges.iter().map(|e| self.cc.lookup(e.id, key, None)).collect(),
            etas: graph
                .supersegments
                .iter()
                .map(|s| {
                    let v = self.eta.lookup(s.id, key, None);
                    if v.is_nan() { 1.0 } else { v.max(1.0) }
                })
                .collect(),
        }
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        enc.put_u8(self.feature_set.tag());
        self.cc.encode(enc);
        self.eta.encode(enc);
        for m in self.members() {
            encode_model(m, enc);
        }
    }

    pub(crate) fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let feature_set = FeatureSet::from_tag(dec.get_u8()?)
            .ok_or_else(|| Error::Malformed("unknown feature set".into()))?;
        let cc = CcEncodingTable::decode(dec)?;
        let eta = EtaEncodingTable::decode(dec)?;
        let a = decode_model(dec)?;
        let b = decode_model(dec)?;
        let extended = decode_model(dec)?;
        let core_cols = feature_set.columns(core_feature_names(), &core_context_columns());
        let ext_cols = feature_set.columns(extended_feature_names(), &extended_context_columns());
        if a.feature_names() != core_cols.as_slice()
            || b.feature_names() != core_cols.as_slice()
            || extended.feature_names() != ext_cols.as_slice()
        {
            return Err(Error::Malformed("stage-two model columns differ from its feature set".into()));
        }
        Ok(Self { feature_set, cc, eta, core: [a, b], extended })
    }
}

pub fn predict_stage2(
    model: &StageTwoModel,
    graph: &RoadGraph,
    snapshot: &CounterSnapshot,
    context: ContextInput<'_>,
) -> Result<StageTwoPrediction> {
    model.predict(graph, snapshot, context)
}

pub fn predict_te_baseline(model: &StageTwoModel, graph: &RoadGraph, context: &TimeContext) -> StageTwoPrediction {
    model.te_baseline(graph, context)
}
