// The full protocol: early stopping on validation weeks, retraining on all
// training days, then prediction and scoring on held-out days.

use twostage::data_model::CounterSnapshot;
use twostage::pipeline::{evaluate, predict_snapshots, synthesize, train_full, Bundle, PipelineConfig, SyntheticSpec};

fn small_config(seed: u64) -> PipelineConfig {
    let mut config = PipelineConfig {
        seed,
        validation_weeks: 1,
        early_stopping_rounds: 30,
        stage2_rows_per_day: 3,
        synthetic: SyntheticSpec {
            train_days: 21,
            test_days: 2,
            ..SyntheticSpec::default()
        },
        ..PipelineConfig::default()
    };
    config.preset_a.num_rounds = 150;
    config.preset_b.num_rounds = 150;
    config
}

pub fn run_example() -> twostage::Result<()> {
    let config = small_config(11);
    let mut spec = config.synthetic.clone();
    spec.seed = config.seed;
    let data = synthesize(&spec, &config.city)?;

    let (bundle, report) = train_full(&config, &data)?;
    for m in report.members.iter().take(4) {
        println!(
            "{:<16} phase 1 ran {:>3} rounds, best {:>3}, final model {:>3}",
            m.model, m.phase1_rounds, m.best_round, m.phase2_rounds
        );
    }
    let bundle = Bundle::from_bytes(&bundle.to_bytes())?;

    let snapshots: Vec<CounterSnapshot> = data.test.iter().map(|s| s.snapshot.clone()).collect();
    let predictions = predict_snapshots(&bundle, &data.graph, &snapshots)?;
    let p = &predictions[0];
    println!(
        "{}: edge 0 red/yellow/green {:.2?}, first ETA {:.0} s",
        p.id, p.output.probabilities[0], p.output.etas[0]
    );

    let eval = evaluate(&bundle, &data.graph, &data.test)?;
    println!(
        "core loss {:.4}, ETA MAE {:.1} s, slot accuracy {:.3}",
        eval.core_loss, eval.extended_mae, eval.stage1.slot.accuracy
    );
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
