//! Data ingestion, preprocessing transforms, univariate Wald screening and
//! cross-validation fold plans.

mod csvio;
mod folds;
mod transform;
mod wald;

use serde::{Deserialize, Serialize};

pub use csvio::{load_covariates, load_csv, save_csv};
pub use folds::{kfold_stratified, loocv_balanced, Fold, FoldPlan};
pub use transform::{
    impute_mean, log1p_transform, scale_unit, standardize, StandardizeParams, UnitScaleParams,
};
pub use wald::{wald_screen, wald_z, ScreenResult, WaldStat};

use crate::error::{Error, Result};

/// Dense row-major matrix of observations × covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix buffer",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(idx.iter().map(|&c| row[c]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }
}

/// A preprocessing step recorded in [`Dataset::provenance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Log1p,
    Standardize,
    UnitScale,
    Impute,
    Screen,
}

/// Covariates, response and the ordered list of transforms applied so far.
///
/// Missing covariate cells are stored as `NaN` until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub column_names: Vec<String>,
    pub response_name: String,
    pub provenance: Vec<Transform>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, column_names: Vec<String>, response_name: &str) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: x.rows(),
                got: y.len(),
            });
        }
        if column_names.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                what: "column names",
                expected: x.cols(),
                got: column_names.len(),
            });
        }
        Ok(Dataset {
            x,
            y,
            column_names,
            response_name: response_name.to_string(),
            provenance: Vec::new(),
        })
    }

    /// Dataset with generated column names `x1..xp` and response `y`.
    pub fn unnamed(x: Matrix, y: Vec<f64>) -> Result<Self> {
        let names = (1..=x.cols()).map(|i| format!("x{i}")).collect();
        Dataset::new(x, y, names, "y")
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Coordinates `(row, column)` of every missing covariate cell.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.n() {
            for c in 0..self.p() {
                if self.x.get(r, c).is_nan() {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.x.as_slice().iter().all(|v| v.is_finite()) && self.y.iter().all(|v| v.is_finite())
    }

    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            column_names: self.column_names.clone(),
            response_name: self.response_name.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_cols(idx),
            y: self.y.clone(),
            column_names: idx.iter().map(|&c| self.column_names[c].clone()).collect(),
            response_name: self.response_name.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Labels as booleans; errors on anything other than 0/1.
pub(crate) fn binary_labels(y: &[f64]) -> Result<Vec<bool>> {
    y.iter()
        .enumerate()
        .map(|(row, &v)| {
            if v == 1.0 {
                Ok(true)
            } else if v == 0.0 {
                Ok(false)
            } else {
                Err(Error::NonBinaryResponse { row, value: v })
            }
        })
        .collect()
}
