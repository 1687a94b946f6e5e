use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data_model::{CounterSnapshot, LabeledSnapshot};
use crate::error::Result;
use crate::gbdt::TrainLog;
use crate::staging::{train_stage1, train_stage2, FeatureSet, Schedule, StageTwoModel};

use super::bundle::Bundle;
use super::config::PipelineConfig;
use super::split::{partition_snapshots, split_validation};
use super::synth::Dataset;

/// Round counts of one model across the two training phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRounds {
    pub model: String,
    /// Rounds run in phase 1 before early stopping.
    pub phase1_rounds: usize,
    pub best_round: usize,
    /// Boosting rounds held by the final model.
    pub phase2_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub city: String,
    pub config_digest: String,
    pub validation_days: Vec<NaiveDate>,
    pub members: Vec<MemberRounds>,
}

impl TrainReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is representable as TOML")
    }
}

const STAGE1_MEMBERS: [&str; 6] = [
    "stage1.month.a",
    "stage1.month.b",
    "stage1.dow.a",
    "stage1.dow.b",
    "stage1.slot.a",
    "stage1.slot.b",
];
const STAGE2_MEMBERS: [&str; 3] = ["core.a", "core.b", "extended"];

fn counter_snapshots(labeled: &[LabeledSnapshot]) -> Vec<CounterSnapshot> {
    labeled.iter().map(|s| s.snapshot.clone()).collect()
}

fn rounds_of(model: &crate::gbdt::GbdtModel) -> usize {
    model.trees().len() / model.n_outputs()
}

fn record(members: &mut Vec<MemberRounds>, names: impl IntoIterator<Item = String>, logs: &[TrainLog], best: &[usize]) {
    for ((model, log), best_round) in names.into_iter().zip(logs).zip(best) {
        members.push(MemberRounds {
            model,
            phase1_rounds: log.rounds_trained,
            best_round: *best_round,
            phase2_rounds: 0,
        });
    }
}

/// Phase 1 trains every model with early stopping against whole validation
/// weeks of the training days; phase 2 retrains each model on all training
/// days for exactly its phase-1 best round.
pub fn train_full(config: &PipelineConfig, dataset: &Dataset) -> Result<(Bundle, TrainReport)> {
    config.validate()?;
    let days: Vec<NaiveDate> = dataset.train.iter().map(LabeledSnapshot::date).collect();
    let (_, validation_days) = split_validation(
        &days,
        config.validation_weeks,
        config.seed,
        config.contiguous_validation,
    )?;
    let (fit, valid) = partition_snapshots(&dataset.train, &validation_days);
    let params = config.ensemble();
    let graph = &dataset.graph;
    let mut members = Vec::new();

    let fit_counters = counter_snapshots(&fit);
    let valid_counters = counter_snapshots(&valid);
    let (s1, logs) = train_stage1(&fit_counters, graph, &params, Schedule::EarlyStopping(&valid_counters))?;
    let s1_rounds = s1.best_rounds();
    record(&mut members, STAGE1_MEMBERS.map(String::from), &logs, &s1_rounds);
    drop((s1, fit_counters, valid_counters));

    let mut variants = vec![FeatureSet::Full];
    if config.train_context_free {
        variants.push(FeatureSet::ContextFree);
    }
    let mut s2_rounds = Vec::new();
    for &fs in &variants {
        let (m, logs) = train_stage2(graph, &fit, &config.stage2_options(fs), Schedule::EarlyStopping(&valid))?;
        let prefix = match fs {
            FeatureSet::Full => "stage2",
            FeatureSet::ContextFree => "stage2_context_free",
        };
        let rounds = m.best_rounds();
        record(&mut members, STAGE2_MEMBERS.map(|n| format!("{prefix}.{n}")), &logs, &rounds);
        s2_rounds.push(rounds);
    }
    drop((fit, valid));

    let all_counters = counter_snapshots(&dataset.train);
    let (stage1, _) = train_stage1(&all_counters, graph, &params, Schedule::Replay(&s1_rounds))?;
    let mut phase2: Vec<usize> = stage1.members().map(rounds_of).collect();
    let mut stage2_models: Vec<StageTwoModel> = Vec::new();
    for (&fs, rounds) in variants.iter().zip(&s2_rounds) {
        let (m, _) = train_stage2(graph, &dataset.train, &config.stage2_options(fs), Schedule::Replay(rounds))?;
        phase2.extend(m.members().map(rounds_of));
        stage2_models.push(m);
    }
    for (m, r) in members.iter_mut().zip(phase2) {
        m.phase2_rounds = r;
    }

    let mut stage2_models = stage2_models.into_iter();
    let bundle = Bundle {
        city: dataset.city.clone(),
        config_digest: config.digest(),
        stage1,
        stage2: stage2_models.next().expect("full stage two is always trained"),
        stage2_context_free: stage2_models.next(),
    };
    let report = TrainReport {
        city: dataset.city.clone(),
        config_digest: bundle.config_digest.clone(),
        validation_days,
        members,
    };
    Ok((bundle, report))
}
