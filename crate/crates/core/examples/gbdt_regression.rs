// Fits `y = 3x + 1` with squared error, then saves and reloads the model.

use twostage::gbdt::{deserialize, serialize, train, FeatureMatrix, GbdtParams, Objective, Targets, MISSING};

pub fn run_example() -> twostage::Result<()> {
    let xs: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
    let features = FeatureMatrix::new(vec!["x".into()], xs.clone())?;
    let params = GbdtParams {
        num_rounds: 300,
        min_samples_leaf: 5,
        ..GbdtParams::preset_b()
    };
    let model = train(&features, &Targets::Real(ys.clone()), &Objective::squared_error(), &params, None)?;

    let pred = model.predict(&features)?;
    let rmse = (pred.iter().zip(&ys).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    println!("{} trees, training RMSE {rmse:.4}", model.trees().len());

    let bytes = serialize(&model);
    let reloaded = deserialize(&bytes)?;
    assert_eq!(serialize(&reloaded), bytes);

    let unknown = FeatureMatrix::new(vec!["x".into()], vec![MISSING])?;
    println!("prediction for a missing x: {:.3}", reloaded.predict(&unknown)?[0]);
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
