// Trains stage one and reads the time of day back out of counter volumes.

use twostage::data_model::{CounterSnapshot, TimeContext};
use twostage::metrics::stage1_metric;
use twostage::pipeline::{synthesize, SyntheticSpec};
use twostage::staging::{train_stage1, EnsembleParams, Schedule};

pub fn run_example() -> twostage::Result<()> {
    let spec = SyntheticSpec {
        train_days: 14,
        test_days: 2,
        seed: 3,
        ..SyntheticSpec::default()
    };
    let data = synthesize(&spec, "example")?;
    let train: Vec<CounterSnapshot> = data.train.iter().map(|s| s.snapshot.clone()).collect();
    let test: Vec<CounterSnapshot> = data.test.iter().map(|s| s.snapshot.clone()).collect();

    let params = EnsembleParams::default().with_rounds(1000, 1000);
    let (model, _) = train_stage1(&train, &data.graph, &params, Schedule::Full)?;

    let predicted = model.predict_contexts(&test)?;
    let truth: Vec<TimeContext> = test.iter().filter_map(|s| s.true_context).collect();
    let d = stage1_metric(&predicted, &truth)?;
    println!(
        "slot: {:.1}% exact, mean cyclic error {:.2} slots",
        100.0 * d.slot.accuracy,
        d.slot.mad
    );
    println!("day of week: {:.1}% exact", 100.0 * d.dow.accuracy);
    let s = &test[40];
    println!("snapshot {} read as {:?}", s.id, model.predict_context(s)?);
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
