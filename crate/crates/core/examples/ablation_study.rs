// Scores the pipeline against the nulled-context, context-free,
// true-context and encoding-only variants.

use twostage::pipeline::{ablate, synthesize, train_full, PipelineConfig, SyntheticSpec};

pub fn run_example() -> twostage::Result<()> {
    let mut config = PipelineConfig {
        seed: 5,
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
    let mut spec = config.synthetic.clone();
    spec.seed = config.seed;
    let data = synthesize(&spec, &config.city)?;
    let (bundle, _) = train_full(&config, &data)?;

    let r = ablate(&bundle, &data.graph, &data.test)?;
    let rows = [
        ("predicted context", Some(r.predicted_context)),
        ("nulled context", Some(r.nulled_context)),
        ("retrained without", r.retrained_without_context),
        ("true context", Some(r.true_context)),
        ("encoding only", Some(r.encoding_baseline)),
    ];
    println!("{:<18} {:>9} {:>8} {:>9}", "condition", "core", "delta", "ETA MAE");
    for (name, c) in rows {
        if let Some(c) = c {
            println!(
                "{name:<18} {:>9.4} {:>+8.3} {:>9.1}",
                c.core_loss, c.delta_core, c.extended_mae
            );
        }
    }
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
