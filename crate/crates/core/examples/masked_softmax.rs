// Class-weighted softmax with unlabeled rows left out of the loss.

use twostage::gbdt::{class_weights, masked_loss, train_logged, FeatureMatrix, GbdtParams, Objective, Targets};

pub fn run_example() -> twostage::Result<()> {
    let loss = masked_loss(
        &[0.7, 0.2, 0.1, 0.2, 0.2, 0.6],
        &[Some(0), Some(2)],
        &[1.0, 1.0, 1.0],
        0.0,
    )?;
    println!("two-row loss: {loss:.7}");

    let counts = [None, Some(0), Some(1), Some(1), Some(2), Some(2), Some(2)];
    println!("weights for class counts 1, 2, 3: {:?}", class_weights(&counts, 3)?);

    // Three bands of x; every fourth row is unlabeled.
    let n = 600;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let ys: Vec<Option<usize>> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (i % 4 != 0).then_some(((x * 3.0) as usize).min(2)))
        .collect();
    let weights = class_weights(&ys, 3)?;
    let objective = Objective::masked_softmax(weights.clone(), 1e-9)?;
    let features = FeatureMatrix::new(vec!["x".into()], xs)?;
    let params = GbdtParams {
        num_rounds: 60,
        ..GbdtParams::preset_b()
    };
    let (model, log) = train_logged(&features, &Targets::Classes(ys.clone()), &objective, &params, None)?;
    let probs = model.predict(&features)?;
    let final_loss = masked_loss(&probs, &ys, &weights, 1e-9)?;
    println!(
        "training loss {:.4} after round 1, {final_loss:.4} after round {}",
        log.train_loss[0], log.rounds_trained
    );
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
