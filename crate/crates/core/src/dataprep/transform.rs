use super::{Dataset, Matrix, Transform};
use crate::error::{Error, Result};

/// `x -> ln(1 + x)` element-wise.
pub fn log1p_transform(data: &Dataset) -> Result<Dataset> {
    let mut out = data.clone();
    for r in 0..data.n() {
        for c in 0..data.p() {
            let v = data.x.get(r, c);
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: r,
                    column: data.column_names[c].clone(),
                    value: v,
                });
            }
            out.x.set(r, c, v.ln_1p());
        }
    }
    out.provenance.push(Transform::Log1p);
    Ok(out)
}

/// Column means and standard deviations (n - 1 denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizeParams {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl StandardizeParams {
    pub fn fit(x: &Matrix, names: &[String]) -> Result<Self> {
        let n = x.rows() as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut sd = Vec::with_capacity(x.cols());
        for c in 0..x.cols() {
            let col = x.column(c);
            let m = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            let s = (ss / (n - 1.0)).sqrt();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::ConstantColumn {
                    column: names[c].clone(),
                    operation: "standardize",
                });
            }
            mean.push(m);
            sd.push(s);
        }
        Ok(StandardizeParams { mean, sd })
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, (x.get(r, c) - self.mean[c]) / self.sd[c]);
            }
        }
        out
    }
}

/// Centers each column to mean 0 and scales to sample standard deviation 1.
pub fn standardize(data: &Dataset) -> Result<Dataset> {
    let params = StandardizeParams::fit(&data.x, &data.column_names)?;
    let mut out = data.clone();
    out.x = params.apply(&data.x);
    out.provenance.push(Transform::Standardize);
    Ok(out)
}

/// Column minima and ranges for mapping onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScaleParams {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl UnitScaleParams {
    pub fn fit(x: &Matrix, names: &[String]) -> Result<Self> {
        let mut min = Vec::with_capacity(x.cols());
        let mut range = Vec::with_capacity(x.cols());
        for c in 0..x.cols() {
            let col = x.column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(Error::ConstantColumn {
                    column: names[c].clone(),
                    operation: "scale to [0, 1]",
                });
            }
            min.push(lo);
            range.push(hi - lo);
        }
        Ok(UnitScaleParams { min, range })
    }

    /// Applies the scaling; values outside the fitted range are clamped so
    /// held-out rows stay inside the basis domain.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                let v = (x.get(r, c) - self.min[c]) / self.range[c];
                out.set(r, c, v.clamp(0.0, 1.0));
            }
        }
        out
    }
}

pub fn scale_unit(data: &Dataset) -> Result<Dataset> {
    let params = UnitScaleParams::fit(&data.x, &data.column_names)?;
    let mut out = data.clone();
    out.x = params.apply(&data.x);
    out.provenance.push(Transform::UnitScale);
    Ok(out)
}

/// Replaces missing cells with the mean of the observed cells in their column.
pub fn impute_mean(data: &Dataset) -> Result<Dataset> {
    let mut out = data.clone();
    for c in 0..data.p() {
        let observed: Vec<f64> = data.x.column(c).into_iter().filter(|v| !v.is_nan()).collect();
        if observed.is_empty() {
            return Err(Error::FullyMissingColumn {
                column: data.column_names[c].clone(),
            });
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for r in 0..data.n() {
            if data.x.get(r, c).is_nan() {
                out.x.set(r, c, mean);
            }
        }
    }
    out.provenance.push(Transform::Impute);
    Ok(out)
}
