use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::binning::BinMapper;
use super::grow::Grower;
use super::matrix::FeatureMatrix;
use super::objective::{
    fill_gradients, masked_loss, softmax_into, Objective, ObjectiveKind, Targets,
};
use super::params::GbdtParams;
use super::tree::{median, refine_leaves, Tree};

/// A trained ensemble. For the softmax objective each round contributes
/// `num_classes` consecutive trees, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub(crate) objective: Objective,
    pub(crate) base_score: Vec<f64>,
    pub(crate) trees: Vec<Tree>,
    pub(crate) params: GbdtParams,
    pub(crate) best_round: usize,
    pub(crate) feature_names: Vec<String>,
}

/// Per-round losses recorded while boosting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Training loss after each round, on every non-IGNORE training row.
    pub train_loss: Vec<f64>,
    /// Validation loss after each round; empty without a validation set.
    pub valid_loss: Vec<f64>,
    pub best_round: usize,
    pub rounds_trained: usize,
}

const PURPOSE_ROWS: u64 = 1;
const PURPOSE_TREE: u64 = 2;
const PURPOSE_LEVEL: u64 = 3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, round: usize, purpose: u64, index: usize) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ round as u64) ^ (purpose << 32 | index as u64));
    ChaCha8Rng::seed_from_u64(key)
}

fn sample_sorted(rng: &mut ChaCha8Rng, from: &[usize], fraction: f64) -> Vec<usize> {
    if fraction >= 1.0 {
        return from.to_vec();
    }
    let k = ((fraction * from.len() as f64).round() as usize).clamp(1, from.len());
    let mut picked: Vec<usize> = sample(rng, from.len(), k).into_iter().map(|i| from[i]).collect();
    picked.sort_unstable();
    picked
}

/// Trains a model; see [`train_logged`] for the per-round losses.
pub fn train(
    features: &FeatureMatrix,
    targets: &Targets,
    objective: &Objective,
    params: &GbdtParams,
    validation: Option<(&FeatureMatrix, &Targets)>,
) -> Result<GbdtModel> {
    train_logged(features, targets, objective, params, validation).map(|(m, _)| m)
}

/// Boosts up to `params.num_rounds` rounds. With a validation set, training
/// stops once the validation loss has not improved for
/// `params.early_stopping_rounds` rounds and the model keeps the trees up to
/// the best round; without one, all rounds are kept.
pub fn train_logged(
    features: &FeatureMatrix,
    targets: &Targets,
    objective: &Objective,
    params: &GbdtParams,
    validation: Option<(&FeatureMatrix, &Targets)>,
) -> Result<(GbdtModel, TrainLog)> {
    params.validate()?;
    if features.n_rows() == 0 || features.n_cols() == 0 {
        return Err(Error::EmptyFeatures);
    }
    if targets.len() != features.n_rows() {
        return Err(Error::TargetLength {
            targets: targets.len(),
            rows: features.n_rows(),
        });
    }
    objective.check_targets(targets)?;
    if let Some((vx, vy)) = validation {
        if vx.column_names() != features.column_names() {
            return Err(Error::ColumnMismatch(
                "validation columns differ from training columns".into(),
            ));
        }
        if vy.len() != vx.n_rows() {
            return Err(Error::TargetLength {
                targets: vy.len(),
                rows: vx.n_rows(),
            });
        }
        objective.check_targets(vy)?;
    }

    let n = features.n_rows();
    let k = objective.n_outputs();
    let active: Vec<usize> = (0..n).filter(|&i| targets.is_active(i)).collect();
    let mapper = BinMapper::fit_rows(features, &active, params.histogram_bins)?;
    let binned = mapper.transform(features);
    let grower = Grower {
        mapper: &mapper,
        binned: &binned,
        params,
    };

    let base_score = base_score(objective, targets);
    let mut raw: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut valid_raw: Vec<f64> = validation
        .map(|(vx, _)| (0..vx.n_rows()).flat_map(|_| base_score.iter().copied()).collect())
        .unwrap_or_default();

    let all_features: Vec<usize> = (0..features.n_cols()).collect();
    let mut grad = vec![0.0; n * k];
    let mut hess = vec![0.0; n * k];
    let mut g_k = vec![0.0; n];
    let mut h_k = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    let mut leaf_of_row: Vec<Option<usize>> = vec![None; n];

    let mut trees = Vec::new();
    let mut log = TrainLog::default();
    let mut best = (f64::INFINITY, 0usize);

    for round in 0..params.num_rounds {
        let sampled: Vec<u32> = if params.subsample < 1.0 {
            let mut rng = stream(params.seed, round, PURPOSE_ROWS, 0);
            (0..n)
                .filter(|_| rng.random::<f64>() < params.subsample)
                .filter(|&i| targets.is_active(i))
                .map(|i| i as u32)
                .collect()
        } else {
            active.iter().map(|&i| i as u32).collect()
        };
        fill_gradients(objective, &raw, targets, &mut grad, &mut hess);

        for class in 0..k {
            for i in 0..n {
                g_k[i] = grad[i * k + class];
                h_k[i] = hess[i * k + class];
            }
            let mut rng = stream(params.seed, round, PURPOSE_TREE, class);
            let tree_features = sample_sorted(&mut rng, &all_features, params.colsample_bytree);
            let mut rng = stream(params.seed, round, PURPOSE_LEVEL, class);
            let level_features: Vec<Vec<usize>> = (0..params.max_depth)
                .map(|_| sample_sorted(&mut rng, &tree_features, params.colsample_bylevel))
                .collect();

            let tree = if sampled.is_empty() {
                Tree::leaf(0.0)
            } else {
                let grown =
                    grower.grow(&g_k, &h_k, sampled.clone(), &tree_features, &level_features);
                if objective.kind() == ObjectiveKind::AbsoluteError {
                    let Targets::Real(ys) = targets else {
                        unreachable!("targets checked against objective")
                    };
                    leaf_of_row.fill(None);
                    for &(leaf, start, end) in &grown.leaves {
                        for &i in &grown.rows[start..end] {
                            leaf_of_row[i as usize] = Some(leaf);
                        }
                    }
                    for &i in &grown.rows {
                        let i = i as usize;
                        residuals[i] = ys[i] - raw[i];
                    }
                    refine_leaves(
                        &grown.tree,
                        objective,
                        &residuals,
                        &leaf_of_row,
                        params.learning_rate,
                    )?
                } else {
                    grown.tree
                }
            };

            add_tree(&tree, features, &mut raw, k, class);
            if let Some((vx, _)) = validation {
                add_tree(&tree, vx, &mut valid_raw, k, class);
            }
            trees.push(tree);
        }

        log.train_loss.push(loss(objective, &raw, targets)?);
        log.rounds_trained = round + 1;
        if let Some((_, vy)) = validation {
            let v = loss(objective, &valid_raw, vy)?;
            log.valid_loss.push(v);
            if v < best.0 {
                best = (v, round + 1);
            }
            if round + 1 - best.1 >= params.early_stopping_rounds {
                break;
            }
        }
    }

    let best_round = if validation.is_some() {
        best.1.max(1)
    } else {
        log.rounds_trained
    };
    log.best_round = best_round;
    trees.truncate(best_round * k);

    let model = GbdtModel {
        objective: objective.clone(),
        base_score,
        trees,
        params: params.clone(),
        best_round,
        feature_names: features.column_names().to_vec(),
    };
    Ok((model, log))
}

fn base_score(objective: &Objective, targets: &Targets) -> Vec<f64> {
    match (objective.kind(), targets) {
        (ObjectiveKind::SquaredError, Targets::Real(ys)) => {
            vec![ys.iter().sum::<f64>() / ys.len() as f64]
        }
        (ObjectiveKind::AbsoluteError, Targets::Real(ys)) => {
            vec![median(&mut ys.clone()).unwrap_or(0.0)]
        }
        _ => vec![0.0; objective.n_outputs()],
    }
}

fn add_tree(tree: &Tree, features: &FeatureMatrix, raw: &mut [f64], k: usize, class: usize) {
    raw.par_chunks_mut(k)
        .enumerate()
        .for_each(|(i, r)| r[class] += tree.predict_row(features.row(i)));
}

/// Loss reported per round: mean squared error, mean absolute error, or the
/// masked class-weighted cross-entropy with the objective's weights.
fn loss(objective: &Objective, raw: &[f64], targets: &Targets) -> Result<f64> {
    match (objective.kind(), targets) {
        (ObjectiveKind::SquaredError, Targets::Real(ys)) => {
            Ok(raw.iter().zip(ys).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / ys.len() as f64)
        }
        (ObjectiveKind::AbsoluteError, Targets::Real(ys)) => {
            Ok(raw.iter().zip(ys).map(|(p, y)| (p - y).abs()).sum::<f64>() / ys.len() as f64)
        }
        (ObjectiveKind::MaskedWeightedSoftmax, Targets::Classes(ys)) => {
            let k = objective.num_classes();
            let mut probs = vec![0.0; raw.len()];
            for (r, p) in raw.chunks(k).zip(probs.chunks_mut(k)) {
                softmax_into(r, p);
            }
            masked_loss(&probs, ys, objective.class_weights(), objective.epsilon())
        }
        _ => Err(Error::TargetKind("targets do not fit objective".into())),
    }
}

impl GbdtModel {
    /// Assembles a model from parts, checking their mutual consistency.
    pub fn from_parts(
        objective: Objective,
        base_score: Vec<f64>,
        trees: Vec<Tree>,
        params: GbdtParams,
        best_round: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let k = objective.n_outputs();
        if base_score.len() != k {
            return Err(Error::Shape(format!(
                "{} base scores for {k} outputs",
                base_score.len()
            )));
        }
        if !trees.len().is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{} trees is not a multiple of {k} outputs",
                trees.len()
            )));
        }
        if best_round * k > trees.len() {
            return Err(Error::Shape(format!(
                "best round {best_round} exceeds the {} stored rounds",
                trees.len() / k
            )));
        }
        if let Some(f) = trees.iter().filter_map(Tree::max_feature).max() {
            if f >= feature_names.len() {
                return Err(Error::Shape(format!(
                    "tree splits on feature {f} of {}",
                    feature_names.len()
                )));
            }
        }
        Ok(Self {
            objective,
            base_score,
            trees,
            params,
            best_round,
            feature_names,
        })
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn base_score(&self) -> &[f64] {
        &self.base_score
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &GbdtParams {
        &self.params
    }

    pub fn best_round(&self) -> usize {
        self.best_round
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_outputs(&self) -> usize {
        self.objective.n_outputs()
    }

    /// Raw scores of one row, before any softmax.
    pub fn predict_row_raw(&self, row: &[f64]) -> Vec<f64> {
        let k = self.n_outputs();
        let mut out = self.base_score.clone();
        for (t, tree) in self.trees[..self.best_round * k].iter().enumerate() {
            out[t % k] += tree.predict_row(row);
        }
        out
    }

    fn check_columns(&self, features: &FeatureMatrix) -> Result<()> {
        if features.column_names() != self.feature_names.as_slice() {
            return Err(Error::ColumnMismatch(format!(
                "model expects {} columns [{}...], got {} columns",
                self.feature_names.len(),
                self.feature_names.first().map(String::as_str).unwrap_or(""),
                features.n_cols()
            )));
        }
        Ok(())
    }

    /// Row-major raw scores with [`n_outputs`](Self::n_outputs) values per row.
    pub fn predict_raw(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_columns(features)?;
        let k = self.n_outputs();
        let mut out = vec![0.0; features.n_rows() * k];
        out.par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, o)| o.copy_from_slice(&self.predict_row_raw(features.row(i))));
        Ok(out)
    }

    /// Row-major predictions: real values for regression, class
    /// probabilities for the softmax objective.
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        let mut out = self.predict_raw(features)?;
        if self.objective.kind() == ObjectiveKind::MaskedWeightedSoftmax {
            let k = self.n_outputs();
            let mut p = vec![0.0; k];
            for row in out.chunks_mut(k) {
                softmax_into(row, &mut p);
                row.copy_from_slice(&p);
            }
        }
        Ok(out)
    }
}
