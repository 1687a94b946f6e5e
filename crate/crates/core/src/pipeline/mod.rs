//! Data files, synthetic cities, the training protocol and the commands
//! behind the command-line tool.
//!
//! A dataset directory holds `nodes.csv`, `edges.csv` and
//! `supersegments.csv`, plus `train/` and `test/` directories with
//! `snapshots.csv`, `core_labels.csv` and `eta_labels.csv`. Every file a
//! command writes goes through a temporary file that is renamed into place.

mod bundle;
mod config;
mod io;
mod run;
mod split;
mod synth;
mod train;

use std::path::PathBuf;

pub use bundle::Bundle;
pub use config::PipelineConfig;
pub use io::{
    atomic_write, ingest, read_csv, read_graph, read_split, write_csv, write_dataset, write_graph,
    write_split, ContextRow, CorePredictionRow, EtaPredictionRow, CORE_LABELS_FILE, EDGES_FILE,
    ETA_LABELS_FILE, NODES_FILE, SNAPSHOTS_FILE, SUPERSEGMENTS_FILE, TEST_DIR, TRAIN_DIR,
};
pub use run::{
    ablate, evaluate, predict_snapshots, score, write_predictions, AblationReport, Condition,
    Scores, SnapshotPrediction, CONTEXTS_FILE, CORE_PREDICTIONS_FILE, ETA_PREDICTIONS_FILE,
};
pub use split::{partition_snapshots, split_validation};
pub use synth::{synthesize, volume_profile, Dataset, SyntheticSpec};
pub use train::{train_full, MemberRounds, TrainReport};

use crate::data_model::CounterSnapshot;
use crate::error::{Error, Result};

pub const TRAIN_REPORT_FILE: &str = "train_report.toml";
pub const EVAL_REPORT_FILE: &str = "eval_report.toml";
pub const ABLATION_REPORT_FILE: &str = "ablation_report.toml";

fn require_dir(path: &PathBuf) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "directory does not exist"),
        ))
    }
}

fn write_text(path: PathBuf, text: String) -> Result<PathBuf> {
    atomic_write(&path, |w| w.write_all(text.as_bytes()))?;
    Ok(path)
}

fn load_bundle(config: &PipelineConfig) -> Result<Bundle> {
    let bundle = Bundle::load(&config.bundle_path())?;
    bundle.check_digest(&config.digest())?;
    Ok(bundle)
}

/// Generates the configured synthetic city into `config.data_dir`.
pub fn cmd_synthesize(config: &PipelineConfig) -> Result<Dataset> {
    let mut spec = config.synthetic.clone();
    spec.seed = config.seed;
    let dataset = synthesize(&spec, &config.city)?;
    write_dataset(&config.data_dir, &dataset)?;
    Ok(dataset)
}

/// Reads and validates the dataset; returns a one-line summary.
pub fn cmd_ingest_check(config: &PipelineConfig) -> Result<String> {
    require_dir(&config.data_dir)?;
    let d = ingest(&config.data_dir, &config.city)?;
    let labels = |s: &[crate::data_model::LabeledSnapshot]| {
        s.iter().map(|x| x.congestion.len() + x.etas.len()).sum::<usize>()
    };
    Ok(format!(
        "ok city={} nodes={} counters={} edges={} supersegments={} train_snapshots={} test_snapshots={} labels={}",
        d.city,
        d.graph.nodes.len(),
        d.graph.counter_nodes().len(),
        d.graph.edges.len(),
        d.graph.supersegments.len(),
        d.train.len(),
        d.test.len(),
        labels(&d.train) + labels(&d.test),
    ))
}

/// Runs [`train_full`] and writes the bundle and the training report.
pub fn cmd_train(config: &PipelineConfig) -> Result<TrainReport> {
    require_dir(&config.data_dir)?;
    let dataset = ingest(&config.data_dir, &config.city)?;
    let (bundle, report) = train_full(config, &dataset)?;
    bundle.save(&config.bundle_path())?;
    write_text(config.out_dir.join(TRAIN_REPORT_FILE), report.to_toml())?;
    Ok(report)
}

/// Predicts every test snapshot and writes the prediction files.
pub fn cmd_predict(config: &PipelineConfig) -> Result<usize> {
    let bundle = load_bundle(config)?;
    let graph = read_graph(&config.data_dir)?;
    let test = read_split(&config.data_dir.join(TEST_DIR), &graph, &config.city)?;
    let snapshots: Vec<CounterSnapshot> = test.into_iter().map(|s| s.snapshot).collect();
    let predictions = predict_snapshots(&bundle, &graph, &snapshots)?;
    write_predictions(&config.out_dir, &graph, &predictions)?;
    Ok(predictions.len())
}

pub fn cmd_evaluate(config: &PipelineConfig) -> Result<crate::metrics::EvalReport> {
    let bundle = load_bundle(config)?;
    let graph = read_graph(&config.data_dir)?;
    let test = read_split(&config.data_dir.join(TEST_DIR), &graph, &config.city)?;
    let report = evaluate(&bundle, &graph, &test)?;
    write_text(config.out_dir.join(EVAL_REPORT_FILE), report.to_toml())?;
    Ok(report)
}

pub fn cmd_ablate(config: &PipelineConfig) -> Result<AblationReport> {
    let bundle = load_bundle(config)?;
    let graph = read_graph(&config.data_dir)?;
    let test = read_split(&config.data_dir.join(TEST_DIR), &graph, &config.city)?;
    let report = ablate(&bundle, &graph, &test)?;
    write_text(config.out_dir.join(ABLATION_REPORT_FILE), report.to_toml())?;
    Ok(report)
}
