//! Row-major `f64` matrix used for feature data.
//!
//! Feature dimensionality here is a few hundred at most, so a flat `Vec`
//! with a column count covers every need of the featurizer and the
//! learners; rows are handed out as slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64` feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Empty matrix with a fixed column count.
    pub fn with_cols(cols: usize) -> Self {
        Matrix { cols, data: Vec::new() }
    }

    /// Builds from complete rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::with_cols(cols);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    /// Appends one row.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::FeatureDimension { expected: self.cols, found: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        if self.cols == 0 { 0 } else { self.data.len() / self.cols }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies the listed rows into a new matrix (used for fold selection
    /// and bootstrap resampling).
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { cols: self.cols, data }
    }

    /// Iterates rows in order.
    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }
}
