use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};

use super::booster::GbdtModel;
use super::objective::{Objective, ObjectiveKind};
use super::params::GbdtParams;
use super::tree::{Tree, TreeNode};

const MAGIC: &[u8; 4] = b"GBDT";
const VERSION: u16 = 1;

const TAG_LEAF: u8 = 0;
const TAG_SPLIT: u8 = 1;

/// Self-contained binary form of a model.
pub fn serialize(model: &GbdtModel) -> Vec<u8> {
    let mut enc = Encoder::with_header(MAGIC, VERSION);
    encode_model(model, &mut enc);
    enc.finish()
}

pub fn deserialize(bytes: &[u8]) -> Result<GbdtModel> {
    let mut dec = Decoder::with_header(bytes, MAGIC, VERSION)?;
    let model = decode_model(&mut dec)?;
    dec.finish()?;
    Ok(model)
}

pub(crate) fn encode_model(m: &GbdtModel, enc: &mut Encoder) {
    let o = &m.objective;
    enc.put_u8(o.kind().tag());
    enc.put_len(o.num_classes());
    enc.put_f64s(o.class_weights());
    enc.put_f64(o.epsilon());
    enc.put_f64s(&m.base_score);
    encode_params(&m.params, enc);
    enc.put_len(m.best_round);
    enc.put_len(m.feature_names.len());
    for name in &m.feature_names {
        enc.put_str(name);
    }
    enc.put_len(m.trees.len());
    for tree in &m.trees {
        enc.put_len(tree.nodes().len());
        for node in tree.nodes() {
            match node {
                TreeNode::Leaf { value } => {
                    enc.put_u8(TAG_LEAF);
                    enc.put_f64(*value);
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    enc.put_u8(TAG_SPLIT);
                    enc.put_u32(*feature);
                    enc.put_f64(*threshold);
                    enc.put_bool(*default_left);
                    enc.put_u32(*left);
                    enc.put_u32(*right);
                }
            }
        }
    }
}

pub(crate) fn decode_model(dec: &mut Decoder<'_>) -> Result<GbdtModel> {
    let kind = ObjectiveKind::from_tag(dec.get_u8()?)?;
    let num_classes = dec.get_len(0)?;
    let class_weights = dec.get_f64s()?;
    let epsilon = dec.get_f64()?;
    let objective = Objective::from_parts(kind, num_classes, class_weights, epsilon)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    let base_score = dec.get_f64s()?;
    let params = decode_params(dec)?;
    let best_round = dec.get_len(0)?;
    let n_names = dec.get_len(8)?;
    let feature_names = (0..n_names).map(|_| dec.get_str()).collect::<Result<Vec<_>>>()?;
    let n_trees = dec.get_len(8)?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = dec.get_len(9)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            nodes.push(match dec.get_u8()? {
                TAG_LEAF => TreeNode::Leaf {
                    value: dec.get_f64()?,
                },
                TAG_SPLIT => TreeNode::Split {
                    feature: dec.get_u32()?,
                    threshold: dec.get_f64()?,
                    default_left: dec.get_bool()?,
                    left: dec.get_u32()?,
                    right: dec.get_u32()?,
                },
                t => return Err(Error::Malformed(format!("unknown tree node tag {t}"))),
            });
        }
        trees.push(Tree::from_nodes(nodes)?);
    }
    GbdtModel::from_parts(objective, base_score, trees, params, best_round, feature_names)
        .map_err(|e| Error::Malformed(e.to_string()))
}

pub(crate) fn encode_params(p: &GbdtParams, enc: &mut Encoder) {
    enc.put_len(p.max_depth);
    enc.put_f64(p.learning_rate);
    enc.put_f64(p.subsample);
    enc.put_f64(p.colsample_bytree);
    enc.put_f64(p.colsample_bylevel);
    enc.put_len(p.num_rounds);
    enc.put_len(p.early_stopping_rounds);
    enc.put_len(p.min_samples_leaf);
    enc.put_f64(p.l2_reg);
    enc.put_len(p.histogram_bins);
    enc.put_u64(p.seed);
}

pub(crate) fn decode_params(dec: &mut Decoder<'_>) -> Result<GbdtParams> {
    Ok(GbdtParams {
        max_depth: dec.get_len(0)?,
        learning_rate: dec.get_f64()?,
        subsample: dec.get_f64()?,
        colsample_bytree: dec.get_f64()?,
        colsample_bylevel: dec.get_f64()?,
        num_rounds: dec.get_len(0)?,
        early_stopping_rounds: dec.get_len(0)?,
        min_samples_leaf: dec.get_len(0)?,
        l2_reg: dec.get_f64()?,
        histogram_bins: dec.get_len(0)?,
        seed: dec.get_u64()?,
    })
}
