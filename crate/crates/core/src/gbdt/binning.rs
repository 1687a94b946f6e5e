use crate::error::{Error, Result};

use super::matrix::{is_missing, FeatureMatrix};

/// Per-feature quantile cut points, computed once from training data.
///
/// A value `v` falls into bin `cuts.partition_point(|c| *c < v)`, so bin `b`
/// holds exactly the values with `cuts[b-1] < v <= cuts[b]`. MISSING values
/// go to a dedicated bin after the value bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    cuts: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn fit(features: &FeatureMatrix, max_bins: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..features.n_rows()).collect();
        Self::fit_rows(features, &rows, max_bins)
    }

    /// Fits cut points on the listed rows only.
    pub fn fit_rows(features: &FeatureMatrix, rows: &[usize], max_bins: usize) -> Result<Self> {
        let mut cuts = Vec::with_capacity(features.n_cols());
        let mut column = Vec::with_capacity(rows.len());
        for j in 0..features.n_cols() {
            column.clear();
            for &i in rows {
                let v = features.get(i, j);
                if is_missing(v) {
                    continue;
                }
                if !v.is_finite() {
                    return Err(Error::Shape(format!(
                        "infinite value in column {:?} at row {i}",
                        features.column_names()[j]
                    )));
                }
                column.push(v);
            }
            cuts.push(quantile_cuts(&mut column, max_bins));
        }
        Ok(Self { cuts })
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    /// Number of value bins of feature `j`; the missing bin has this index.
    pub fn n_value_bins(&self, j: usize) -> usize {
        self.cuts[j].len() + 1
    }

    pub fn cuts(&self, j: usize) -> &[f64] {
        &self.cuts[j]
    }

    pub fn bin(&self, j: usize, v: f64) -> u16 {
        let c = &self.cuts[j];
        if is_missing(v) {
            c.len() as u16 + 1
        } else {
            c.partition_point(|cut| *cut < v) as u16
        }
    }

    /// Upper threshold of value bin `b`: rows with `v <= threshold` lie in bins `0..=b`.
    pub fn threshold(&self, j: usize, b: usize) -> f64 {
        self.cuts[j].get(b).copied().unwrap_or(f64::INFINITY)
    }

    /// Column-major bin codes of `features`.
    pub fn transform(&self, features: &FeatureMatrix) -> BinnedMatrix {
        let n = features.n_rows();
        let mut codes = vec![0u16; n * self.n_features()];
        for j in 0..self.n_features() {
            let col = &mut codes[j * n..(j + 1) * n];
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = self.bin(j, features.get(i, j));
            }
        }
        BinnedMatrix { n_rows: n, codes }
    }
}

#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    codes: Vec<u16>,
}

impl BinnedMatrix {
    pub fn column(&self, j: usize) -> &[u16] {
        &self.codes[j * self.n_rows..(j + 1) * self.n_rows]
    }
}

/// Cut points splitting the sorted distinct values into at most `max_bins`
/// groups of roughly equal row count. Cuts are midpoints between adjacent
/// distinct values.
fn quantile_cuts(values: &mut [f64], max_bins: usize) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in values.iter() {
        match distinct.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= 1 {
        return Vec::new();
    }
    let midpoint = |a: f64, b: f64| a + (b - a) / 2.0;
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect();
    }
    let per_bin = values.len() as f64 / max_bins as f64;
    let mut cuts = Vec::with_capacity(max_bins - 1);
    let mut seen = 0usize;
    let mut next_boundary = per_bin;
    for w in distinct.windows(2) {
        seen += w[0].1;
        if seen as f64 >= next_boundary && cuts.len() < max_bins - 1 {
            cuts.push(midpoint(w[0].0, w[1].0));
            while next_boundary <= seen as f64 {
                next_boundary += per_bin;
            }
        }
    }
    cuts
}
