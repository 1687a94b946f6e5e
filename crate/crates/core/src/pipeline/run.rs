use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_model::{
    CongestionClass, CounterSnapshot, EdgeId, LabeledSnapshot, RoadGraph, SnapshotId,
    SuperSegmentId, TimeContext, NUM_CLASSES,
};
use crate::error::{Error, Result};
use crate::gbdt::DEFAULT_EPSILON;
use crate::metrics::{core_metric_self_weighted, extended_metric, stage1_metric, EvalReport};
use crate::staging::{ContextInput, StageTwoModel, StageTwoPrediction};

use super::bundle::Bundle;
use super::io::{write_csv, ContextRow, CorePredictionRow, EtaPredictionRow};

pub const CORE_PREDICTIONS_FILE: &str = "predictions_core.csv";
pub const ETA_PREDICTIONS_FILE: &str = "predictions_eta.csv";
pub const CONTEXTS_FILE: &str = "contexts.csv";

/// Outputs of the full two-stage pipeline for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPrediction {
    pub id: SnapshotId,
    pub context: TimeContext,
    pub output: StageTwoPrediction,
}

/// Stage one then stage two on every snapshot.
pub fn predict_snapshots(
    bundle: &Bundle,
    graph: &RoadGraph,
    snapshots: &[CounterSnapshot],
) -> Result<Vec<SnapshotPrediction>> {
    let contexts = bundle.stage1.predict_contexts(snapshots)?;
    snapshots
        .iter()
        .zip(contexts)
        .map(|(s, context)| {
            Ok(SnapshotPrediction {
                id: s.id,
                context,
                output: bundle.stage2.predict(graph, s, ContextInput::Known(&context))?,
            })
        })
        .collect()
}

/// Writes the core, travel-time and context prediction files into `dir`.
pub fn write_predictions(dir: &Path, graph: &RoadGraph, predictions: &[SnapshotPrediction]) -> Result<()> {
    write_csv(
        &dir.join(CORE_PREDICTIONS_FILE),
        predictions.iter().flat_map(|p| {
            let id = p.id.to_string();
            graph.edges.iter().zip(&p.output.probabilities).map(move |(e, pr)| {
                let best = (0..NUM_CLASSES)
                    .fold(0, |b, k| if pr[k] > pr[b] { k } else { b });
                CorePredictionRow {
                    snapshot_id: id.clone(),
                    edge_id: e.id.0,
                    p_red: pr[0],
                    p_yellow: pr[1],
                    p_green: pr[2],
                    argmax: CongestionClass::from_index(best).expect("class index").name().to_string(),
                }
            })
        }),
    )?;
    write_csv(
        &dir.join(ETA_PREDICTIONS_FILE),
        predictions.iter().flat_map(|p| {
            let id = p.id.to_string();
            graph.supersegments.iter().zip(&p.output.etas).map(move |(s, eta)| EtaPredictionRow {
                snapshot_id: id.clone(),
                supersegment_id: s.id.0,
                eta_seconds: *eta,
            })
        }),
    )?;
    write_csv(
        &dir.join(CONTEXTS_FILE),
        predictions.iter().map(|p| ContextRow {
            snapshot_id: p.id.to_string(),
            month: p.context.month(),
            day_of_week: p.context.day_of_week(),
            slot: p.context.slot(),
        }),
    )
}

/// Core loss and travel-time error of per-snapshot outputs against labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub core_loss: f64,
    pub extended_mae: f64,
    pub core_rows: usize,
    pub core_ignored: usize,
    pub extended_rows: usize,
}

/// Scores `outputs[i]` against `labeled[i]`. Class weights come from the
/// evaluated labels.
pub fn score(graph: &RoadGraph, labeled: &[LabeledSnapshot], outputs: &[StageTwoPrediction]) -> Result<Scores> {
    if labeled.len() != outputs.len() {
        return Err(Error::Shape(format!("{} outputs for {} snapshots", outputs.len(), labeled.len())));
    }
    let edge_index: HashMap<EdgeId, usize> = graph.edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
    let ss_index: HashMap<SuperSegmentId, usize> =
        graph.supersegments.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut probs = Vec::new();
    let mut targets = Vec::new();
    let mut eta_pred = Vec::new();
    let mut eta_true = Vec::new();
    for (s, out) in labeled.iter().zip(outputs) {
        for l in &s.congestion {
            let i = *edge_index
                .get(&l.edge)
                .ok_or_else(|| Error::Layout(format!("label for unknown edge {}", l.edge)))?;
            probs.extend_from_slice(&out.probabilities[i]);
            targets.push(l.class.map(CongestionClass::index));
        }
        for l in &s.etas {
            let i = *ss_index
                .get(&l.supersegment)
                .ok_or_else(|| Error::Layout(format!("label for unknown supersegment {}", l.supersegment)))?;
            eta_pred.push(out.etas[i]);
            eta_true.push(l.eta);
        }
    }
    if targets.iter().all(Option::is_none) {
        return Err(Error::EmptyInput("held-out congestion labels"));
    }
    if eta_true.is_empty() {
        return Err(Error::EmptyInput("held-out ETA labels"));
    }
    Ok(Scores {
        core_loss: core_metric_self_weighted(&probs, &targets, NUM_CLASSES, DEFAULT_EPSILON)?,
        extended_mae: extended_metric(&eta_pred, &eta_true)?,
        core_rows: targets.len(),
        core_ignored: targets.iter().filter(|t| t.is_none()).count(),
        extended_rows: eta_true.len(),
    })
}

fn true_contexts(labeled: &[LabeledSnapshot]) -> Result<Vec<TimeContext>> {
    labeled
        .iter()
        .map(|s| {
            s.snapshot
                .true_context
                .ok_or_else(|| Error::MissingContext(format!("held-out snapshot {}", s.snapshot.id)))
        })
        .collect()
}

/// Runs the pipeline on held-out labeled snapshots and scores it.
pub fn evaluate(bundle: &Bundle, graph: &RoadGraph, labeled: &[LabeledSnapshot]) -> Result<EvalReport> {
    if labeled.is_empty() {
        return Err(Error::EmptyInput("held-out snapshots"));
    }
    let snapshots: Vec<CounterSnapshot> = labeled.iter().map(|s| s.snapshot.clone()).collect();
    let predictions = predict_snapshots(bundle, graph, &snapshots)?;
    let predicted: Vec<TimeContext> = predictions.iter().map(|p| p.context).collect();
    let stage1 = stage1_metric(&predicted, &true_contexts(labeled)?)?;
    let outputs: Vec<StageTwoPrediction> = predictions.into_iter().map(|p| p.output).collect();
    let s = score(graph, labeled, &outputs)?;
    Ok(EvalReport {
        core_loss: s.core_loss,
        extended_mae: s.extended_mae,
        stage1,
        snapshots: labeled.len(),
        core_rows: s.core_rows,
        core_ignored: s.core_ignored,
        extended_rows: s.extended_rows,
    })
}

/// Scores of one ablation condition and its relative change against the
/// two-stage pipeline with predicted context, `(a - x) / a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub core_loss: f64,
    pub extended_mae: f64,
    pub delta_core: f64,
    pub delta_extended: f64,
}

/// Ablation conditions:
/// (a) two-stage with predicted context, (b) context columns set to missing,
/// (b') stage two retrained without context columns, (c) ground-truth
/// context, (d) encoding-only baseline at the predicted context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub predicted_context: Condition,
    pub nulled_context: Condition,
    pub retrained_without_context: Option<Condition>,
    pub true_context: Condition,
    pub encoding_baseline: Condition,
}

impl AblationReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is representable as TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn run_condition(
    graph: &RoadGraph,
    labeled: &[LabeledSnapshot],
    model: &StageTwoModel,
    contexts: Option<&[TimeContext]>,
) -> Result<Vec<StageTwoPrediction>> {
    labeled
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let input = match contexts {
                Some(c) => ContextInput::Known(&c[i]),
                None => ContextInput::Nulled,
            };
            model.predict(graph, &s.snapshot, input)
        })
        .collect()
}

pub fn ablate(bundle: &Bundle, graph: &RoadGraph, labeled: &[LabeledSnapshot]) -> Result<AblationReport> {
    if labeled.is_empty() {
        return Err(Error::EmptyInput("held-out snapshots"));
    }
    let snapshots: Vec<CounterSnapshot> = labeled.iter().map(|s| s.snapshot.clone()).collect();
    let predicted = bundle.stage1.predict_contexts(&snapshots)?;
    let truth = true_contexts(labeled)?;

    let a = score(graph, labeled, &run_condition(graph, labeled, &bundle.stage2, Some(&predicted))?)?;
    let condition = |s: Scores| Condition {
        core_loss: s.core_loss,
        extended_mae: s.extended_mae,
        delta_core: (a.core_loss - s.core_loss) / a.core_loss,
        delta_extended: (a.extended_mae - s.extended_mae) / a.extended_mae,
    };
    let b = score(graph, labeled, &run_condition(graph, labeled, &bundle.stage2, None)?)?;
    let b_prime = match &bundle.stage2_context_free {
        Some(m) => Some(condition(score(graph, labeled, &run_condition(graph, labeled, m, None)?)?)),
        None => None,
    };
    let c = score(graph, labeled, &run_condition(graph, labeled, &bundle.stage2, Some(&truth))?)?;
    let baseline: Vec<StageTwoPrediction> = predicted
        .iter()
        .map(|ctx| bundle.stage2.te_baseline(graph, ctx))
        .collect();
    let d = score(graph, labeled, &baseline)?;
    Ok(AblationReport {
        predicted_context: condition(a),
        nulled_context: condition(b),
        retrained_without_context: b_prime,
        true_context: condition(c),
        encoding_baseline: condition(d),
    })
}
