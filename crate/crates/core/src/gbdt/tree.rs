use crate::error::{Error, Result};

use super::matrix::is_missing;
use super::objective::{Objective, ObjectiveKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: u32,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        /// Direction taken by MISSING values.
        default_left: bool,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree with a single output. The root is node 0 and children
/// always have larger indices than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Malformed("tree without nodes".into()));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = n {
                for c in [*left as usize, *right as usize] {
                    if c <= i || c >= nodes.len() {
                        return Err(Error::Malformed(format!("node {i} points at child {c}")));
                    }
                    parents[c] += 1;
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|p| *p != 1) {
            return Err(Error::Malformed("tree nodes do not form a single tree".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = row[*feature as usize];
                    let go_left = if is_missing(v) { *default_left } else { v <= *threshold };
                    i = if go_left { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature as usize),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    pub(crate) fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        if let TreeNode::Leaf { value: v } = &mut self.nodes[leaf] {
            *v = value;
        }
    }
}

/// Median with the even-count convention of averaging the two central values.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Replaces every leaf value by `learning_rate` times the median residual
/// (target minus current prediction) of the rows assigned to that leaf.
///
/// `leaf_of_row[i]` is the node index of the leaf reached by row `i`, or
/// `None` for rows outside the training sample.
pub fn refine_leaves(
    tree: &Tree,
    objective: &Objective,
    residuals: &[f64],
    leaf_of_row: &[Option<usize>],
    learning_rate: f64,
) -> Result<Tree> {
    if objective.kind() != ObjectiveKind::AbsoluteError {
        return Err(Error::TargetKind(format!(
            "leaf refinement needs AbsoluteError, got {:?}",
            objective.kind()
        )));
    }
    if residuals.len() != leaf_of_row.len() {
        return Err(Error::Shape(format!(
            "{} residuals for {} leaf assignments",
            residuals.len(),
            leaf_of_row.len()
        )));
    }
    let mut per_leaf: Vec<Vec<f64>> = vec![Vec::new(); tree.nodes.len()];
    for (r, leaf) in residuals.iter().zip(leaf_of_row) {
        if let Some(l) = *leaf {
            if !matches!(tree.nodes.get(l), Some(TreeNode::Leaf { .. })) {
                return Err(Error::Shape(format!("node {l} is not a leaf")));
            }
            per_leaf[l].push(*r);
        }
    }
    let mut out = tree.clone();
    for (i, node) in tree.nodes.iter().enumerate() {
        if let TreeNode::Leaf { .. } = node {
            let m = median(&mut per_leaf[i]).ok_or(Error::EmptyLeaf { leaf: i })?;
            out.set_leaf_value(i, m * learning_rate);
        }
    }
    Ok(out)
}
