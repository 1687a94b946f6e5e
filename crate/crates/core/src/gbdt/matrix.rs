use std::collections::HashSet;

use crate::error::{Error, Result};

/// Marker for an absent cell. NaN never compares equal to a real value, so it
/// cannot be confused with data.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

/// Dense row-major feature table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    column_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n_cols = column_names.len();
        let mut seen = HashSet::with_capacity(n_cols);
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Shape(format!("duplicate column name {name:?}")));
            }
        }
        if n_cols == 0 {
            if !values.is_empty() {
                return Err(Error::Shape("values supplied for zero columns".into()));
            }
            return Ok(Self {
                n_rows: 0,
                column_names,
                values,
            });
        }
        if !values.len().is_multiple_of(n_cols) {
            return Err(Error::Shape(format!(
                "{} values do not fill rows of {n_cols} columns",
                values.len()
            )));
        }
        Ok(Self {
            n_rows: values.len() / n_cols,
            column_names,
            values,
        })
    }

    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, expected {n_cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(column_names, values)
    }

    /// Empty matrix with the given columns, to be filled with [`push_row`](Self::push_row).
    pub fn with_columns(column_names: Vec<String>) -> Self {
        Self {
            n_rows: 0,
            column_names,
            values: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols() {
            return Err(Error::Shape(format!(
                "row has {} values, expected {}",
                row.len(),
                self.n_cols()
            )));
        }
        self.values.extend_from_slice(row);
        self.n_rows += 1;
        Ok(())
    }

    /// Appends all rows of `other`, which must have identical columns.
    pub fn append(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.column_names != self.column_names {
            return Err(Error::ColumnMismatch(
                "cannot stack matrices with different columns".into(),
            ));
        }
        self.values.extend_from_slice(&other.values);
        self.n_rows += other.n_rows;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Copy keeping only `columns`, in the order given.
    pub fn select_columns(&self, columns: &[&str]) -> Result<FeatureMatrix> {
        let idx = columns
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| Error::ColumnMismatch(format!("no column {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(self.n_rows * idx.len());
        for r in 0..self.n_rows {
            let row = self.row(r);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        FeatureMatrix::new(columns.iter().map(|c| c.to_string()).collect(), values)
    }

    /// Copy with every cell of the named columns set to [`MISSING`].
    pub fn with_missing_columns(&self, columns: &[&str]) -> Result<FeatureMatrix> {
        let idx = columns
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| Error::ColumnMismatch(format!("no column {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        let c = self.n_cols();
        for r in 0..self.n_rows {
            for &j in &idx {
                out.values[r * c + j] = MISSING;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn shape_checks() {
        assert!(FeatureMatrix::new(names(2), vec![1.0, 2.0, 3.0]).is_err());
        assert!(FeatureMatrix::new(vec!["a".into(), "a".into()], vec![]).is_err());
        let m = FeatureMatrix::new(names(2), vec![1.0, 2.0, 3.0, MISSING]).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert!(is_missing(m.get(1, 1)));
        assert!(!is_missing(m.get(1, 0)));
    }

    #[test]
    fn column_edits() {
        let m = FeatureMatrix::from_rows(names(3), &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
            .unwrap();
        let s = m.select_columns(&["f2", "f0"]).unwrap();
        assert_eq!(s.row(1), &[6.0, 4.0]);
        let n = m.with_missing_columns(&["f1"]).unwrap();
        assert!(is_missing(n.get(0, 1)) && is_missing(n.get(1, 1)));
        assert_eq!(n.get(0, 2), 3.0);
        assert!(m.select_columns(&["nope"]).is_err());
    }
}
