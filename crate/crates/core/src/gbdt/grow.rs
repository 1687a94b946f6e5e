//! Depth-wise tree growth over gradient histograms.

use rayon::prelude::*;

use super::binning::{BinMapper, BinnedMatrix};
use super::params::GbdtParams;
use super::tree::{Tree, TreeNode};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BinStat {
    g: f64,
    h: f64,
    n: u32,
}

impl BinStat {
    fn add(&mut self, o: &BinStat) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }

    fn minus(&self, o: &BinStat) -> BinStat {
        BinStat {
            g: self.g - o.g,
            h: self.h - o.h,
            n: self.n - o.n,
        }
    }
}

/// Result of growing one tree: the tree, the permuted training rows and the
/// `(leaf node, start, end)` ranges of that permutation.
pub(crate) struct Grown {
    pub tree: Tree,
    pub rows: Vec<u32>,
    pub leaves: Vec<(usize, usize, usize)>,
}

pub(crate) struct Grower<'a> {
    pub mapper: &'a BinMapper,
    pub binned: &'a BinnedMatrix,
    pub params: &'a GbdtParams,
}

struct Pending {
    node: usize,
    start: usize,
    end: usize,
    total: BinStat,
    hist: Vec<BinStat>,
}

struct Split {
    gain: f64,
    feature: usize,
    bin: usize,
    default_left: bool,
    left: BinStat,
}

impl Grower<'_> {
    /// Grows a tree on `rows` (the active training sample). `tree_features`
    /// lists the features sampled for this tree; `level_features[d]` the
    /// subset searched at depth `d`. Both are in ascending column order.
    pub fn grow(
        &self,
        grad: &[f64],
        hess: &[f64],
        rows: Vec<u32>,
        tree_features: &[usize],
        level_features: &[Vec<usize>],
    ) -> Grown {
        let params = self.params;
        let stride = tree_features
            .iter()
            .map(|&f| self.mapper.n_value_bins(f) + 1)
            .max()
            .unwrap_or(1);
        let mut rows = rows;
        let mut scratch = Vec::with_capacity(rows.len());
        let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
        let mut leaves = Vec::new();

        let mut total = BinStat::default();
        for &i in &rows {
            total.add(&BinStat {
                g: grad[i as usize],
                h: hess[i as usize],
                n: 1,
            });
        }
        let root_hist = self.histogram(grad, hess, &rows, tree_features, stride);
        let mut level = vec![Pending {
            node: 0,
            start: 0,
            end: rows.len(),
            total,
            hist: root_hist,
        }];

        for depth in 0..=params.max_depth {
            let mut next = Vec::new();
            for p in level {
                let split = if depth < params.max_depth
                    && p.total.n as usize >= 2 * params.min_samples_leaf
                {
                    self.best_split(&p, tree_features, &level_features[depth], stride)
                } else {
                    None
                };
                let Some(s) = split else {
                    nodes[p.node] = TreeNode::Leaf {
                        value: self.leaf_value(&p.total),
                    };
                    leaves.push((p.node, p.start, p.end));
                    continue;
                };

                let missing_bin = self.mapper.n_value_bins(s.feature) as u16;
                let codes = self.binned.column(s.feature);
                let goes_left = |i: u32| {
                    let c = codes[i as usize];
                    if c == missing_bin {
                        s.default_left
                    } else {
                        c as usize <= s.bin
                    }
                };
                scratch.clear();
                let segment = &mut rows[p.start..p.end];
                let mut n_left = 0;
                for j in 0..segment.len() {
                    let i = segment[j];
                    if goes_left(i) {
                        segment[n_left] = i;
                        n_left += 1;
                    } else {
                        scratch.push(i);
                    }
                }
                segment[n_left..].copy_from_slice(&scratch);
                let mid = p.start + n_left;

                let left_node = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[p.node] = TreeNode::Split {
                    feature: s.feature as u32,
                    threshold: self.mapper.threshold(s.feature, s.bin),
                    default_left: s.default_left,
                    left: left_node as u32,
                    right: left_node as u32 + 1,
                };

                let right_total = p.total.minus(&s.left);
                let (left_hist, right_hist) = if depth + 1 < params.max_depth {
                    let left_small = n_left <= p.end - mid;
                    let small_rows = if left_small {
                        &rows[p.start..mid]
                    } else {
                        &rows[mid..p.end]
                    };
                    let small = self.histogram(grad, hess, small_rows, tree_features, stride);
                    let mut large = p.hist;
                    for (a, b) in large.iter_mut().zip(&small) {
                        *a = a.minus(b);
                    }
                    if left_small {
                        (small, large)
                    } else {
                        (large, small)
                    }
                } else {
                    (Vec::new(), Vec::new())
                };
                next.push(Pending {
                    node: left_node,
                    start: p.start,
                    end: mid,
                    total: s.left,
                    hist: left_hist,
                });
                next.push(Pending {
                    node: left_node + 1,
                    start: mid,
                    end: p.end,
                    total: right_total,
                    hist: right_hist,
                });
            }
            if next.is_empty() {
                break;
            }
            level = next;
        }

        let tree = Tree::from_nodes(nodes).expect("grown trees are well formed");
        Grown { tree, rows, leaves }
    }

    fn leaf_value(&self, s: &BinStat) -> f64 {
        let denom = s.h + self.params.l2_reg;
        if denom > 0.0 {
            -s.g / denom * self.params.learning_rate
        } else {
            0.0
        }
    }

    fn score(&self, s: &BinStat) -> f64 {
        let denom = s.h + self.params.l2_reg;
        if denom > 0.0 {
            s.g * s.g / denom
        } else {
            0.0
        }
    }

    fn histogram(
        &self,
        grad: &[f64],
        hess: &[f64],
        rows: &[u32],
        features: &[usize],
        stride: usize,
    ) -> Vec<BinStat> {
        let mut hist = vec![BinStat::default(); features.len() * stride];
        hist.par_chunks_mut(stride)
            .zip(features.par_iter())
            .for_each(|(h, &f)| {
                let codes = self.binned.column(f);
                for &i in rows {
                    let i = i as usize;
                    let b = &mut h[codes[i] as usize];
                    b.g += grad[i];
                    b.h += hess[i];
                    b.n += 1;
                }
            });
        hist
    }

    fn best_split(
        &self,
        p: &Pending,
        tree_features: &[usize],
        candidates: &[usize],
        stride: usize,
    ) -> Option<Split> {
        let msl = self.params.min_samples_leaf as u32;
        let parent_score = self.score(&p.total);
        let mut best: Option<Split> = None;
        let mut best_gain = 0.0;
        let mut slot = 0;
        for &f in candidates {
            while tree_features[slot] != f {
                slot += 1;
            }
            let h = &p.hist[slot * stride..(slot + 1) * stride];
            let nb = self.mapper.n_value_bins(f);
            let missing = h[nb];
            let mut cum = BinStat::default();
            for (b, stat) in h[..nb].iter().enumerate() {
                cum.add(stat);
                if p.total.n - cum.n < msl {
                    break;
                }
                if cum.n + missing.n < msl {
                    continue;
                }
                for default_left in [true, false] {
                    if !default_left && missing.n == 0 {
                        continue;
                    }
                    let mut left = cum;
                    if default_left {
                        left.add(&missing);
                    }
                    let right = p.total.minus(&left);
                    if left.n < msl || right.n < msl {
                        continue;
                    }
                    let gain = self.score(&left) + self.score(&right) - parent_score;
                    if gain > best_gain {
                        best_gain = gain;
                        best = Some(Split {
                            gain,
                            feature: f,
                            bin: b,
                            default_left,
                            left,
                        });
                    }
                }
            }
        }
        debug_assert!(best.as_ref().is_none_or(|s| s.gain > 0.0));
        best
    }
}
