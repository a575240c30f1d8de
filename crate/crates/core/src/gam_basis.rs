//! Piecewise-linear hinge basis for the additive model.
//!
//! Each covariate effect is `f(x) = Σ_k w_k φ_k(x)` with
//! `φ_k(x) = max(0, x - x_k) / (1 - x_k)` on `[0, 1]`. The first knot is 0,
//! so `φ_1(x) = x` carries the linear part of the effect and every `f`
//! vanishes at the origin.

use serde::{Deserialize, Serialize};

use crate::dataprep::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotGrid {
    knots: Vec<f64>,
}

impl KnotGrid {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        match knots.first() {
            None => return Err(Error::InvalidKnots("empty knot list".into())),
            Some(&k) if k != 0.0 => {
                return Err(Error::InvalidKnots(format!("first knot must be 0, got {k}")))
            }
            _ => {}
        }
        if let Some(&k) = knots.iter().find(|&&k| !(0.0..1.0).contains(&k)) {
            return Err(Error::InvalidKnots(format!("knot {k} outside [0, 1)")));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots("knots must be strictly increasing".into()));
        }
        Ok(KnotGrid { knots })
    }

    /// `M` knots at `0, 1/M, ..., (M-1)/M`.
    pub fn equally_spaced(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidKnots("need at least one knot".into()));
        }
        KnotGrid::new((0..m).map(|k| k as f64 / m as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

fn check_unit(x: f64, row: usize, col: usize) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfUnitRange { row, col, value: x })
    }
}

fn hinge(x: f64, knot: f64) -> f64 {
    if x <= knot {
        0.0
    } else {
        (x - knot) / (1.0 - knot)
    }
}

/// Basis function with breakpoint `knot`, evaluated at `x`.
pub fn phi(x: f64, knot: f64) -> Result<f64> {
    check_unit(x, 0, 0)?;
    if !(0.0..1.0).contains(&knot) {
        return Err(Error::InvalidKnots(format!("knot {knot} outside [0, 1)")));
    }
    Ok(hinge(x, knot))
}

/// Expands an `n × p` design into `n × (p·M)`: column `i*M + k` holds
/// `φ_k(x_i)` (covariate-major, knot-minor).
pub fn expand_design(x: &Matrix, grid: &KnotGrid) -> Result<Matrix> {
    let (n, p, m) = (x.rows(), x.cols(), grid.len());
    let mut bad = None;
    let mut bad_count = 0;
    for r in 0..n {
        for c in 0..p {
            let v = x.get(r, c);
            if !(0.0..=1.0).contains(&v) {
                bad_count += 1;
                bad.get_or_insert((r, c));
            }
        }
    }
    if let Some((row, col)) = bad {
        return Err(Error::OutOfUnitRangeCells {
            count: bad_count,
            row,
            col,
        });
    }
    let mut data = Vec::with_capacity(n * p * m);
    for r in 0..n {
        for &v in x.row(r) {
            data.extend(grid.knots.iter().map(|&k| hinge(v, k)));
        }
    }
    Matrix::from_row_major(n, p * m, data)
}

/// Evaluates `f(x) = Σ_k weights[k] φ_k(x)` at each query point.
pub fn reconstruct_f(weights: &[f64], grid: &KnotGrid, query: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "basis weights",
            expected: grid.len(),
            got: weights.len(),
        });
    }
    query
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            check_unit(x, i, 0)?;
            Ok(weights
                .iter()
                .zip(&grid.knots)
                .map(|(w, &k)| w * hinge(x, k))
                .sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.3, 0.5).unwrap(), 0.0);
        assert_eq!(phi(0.5, 0.5).unwrap(), 0.0);
        for k in [0.0, 0.2, 0.75, 0.99] {
            assert_abs_diff_eq!(phi(1.0, k).unwrap(), 1.0, epsilon = 1e-15);
        }
        for x in [0.0, 0.1, 0.5, 1.0] {
            assert_eq!(phi(x, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn phi_rejects_out_of_range() {
        assert!(matches!(phi(1.2, 0.0), Err(Error::OutOfUnitRange { .. })));
        assert!(phi(-0.1, 0.0).is_err());
        assert!(phi(0.5, 1.0).is_err());
    }

    #[test]
    fn knot_grid_validation() {
        assert!(KnotGrid::new(vec![0.1, 0.5]).is_err());
        assert!(KnotGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(KnotGrid::new(vec![0.0, 1.0]).is_err());
        assert!(KnotGrid::new(vec![]).is_err());
        let g = KnotGrid::equally_spaced(5).unwrap();
        assert_eq!(g.knots(), &[0.0, 0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn expand_single_knot_is_identity() {
        let x = Matrix::from_rows(&[vec![0.1, 0.9], vec![0.5, 0.0]]).unwrap();
        let e = expand_design(&x, &KnotGrid::new(vec![0.0]).unwrap()).unwrap();
        assert_eq!(e, x);
    }

    #[test]
    fn expand_hand_evaluated_row() {
        let x = Matrix::from_rows(&[vec![0.75]]).unwrap();
        let e = expand_design(&x, &KnotGrid::new(vec![0.0, 0.5]).unwrap()).unwrap();
        assert_eq!(e.row(0), &[0.75, 0.5]);
    }

    #[test]
    fn expand_zero_and_ordering() {
        let g = KnotGrid::equally_spaced(3).unwrap();
        let z = expand_design(&Matrix::zeros(4, 2), &g).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        let x = Matrix::from_rows(&[vec![0.5, 1.0]]).unwrap();
        let e = expand_design(&x, &g).unwrap();
        // covariate 0 first, then covariate 1
        assert_abs_diff_eq!(e.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.get(0, 1), (0.5 - 1.0 / 3.0) / (2.0 / 3.0), epsilon = 1e-15);
        assert_eq!(e.get(0, 2), 0.0);
        assert_eq!(&e.row(0)[3..], &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn expand_reports_offending_cells() {
        let x = Matrix::from_rows(&[vec![0.5, 1.5], vec![-0.2, 0.3]]).unwrap();
        match expand_design(&x, &KnotGrid::equally_spaced(2).unwrap()) {
            Err(Error::OutOfUnitRangeCells { count, row, col }) => {
                assert_eq!((count, row, col), (2, 0, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reconstruct_examples() {
        let g = KnotGrid::new(vec![0.0, 0.5]).unwrap();
        assert_eq!(reconstruct_f(&[0.0, 0.0], &g, &[0.3, 0.9]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(reconstruct_f(&[1.0, 0.0], &g, &[0.3, 0.9]).unwrap(), vec![0.3, 0.9]);
        assert_abs_diff_eq!(reconstruct_f(&[1.0, 1.0], &g, &[0.75]).unwrap()[0], 1.25, epsilon = 1e-15);
        assert!(reconstruct_f(&[1.0], &g, &[0.5]).is_err());
    }

    /// Solves a small dense system by Gaussian elimination with partial pivoting.
    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    proptest! {
        #[test]
        fn expansion_dot_weights_equals_reconstruction(
            xs in proptest::collection::vec(0.0f64..=1.0, 1..20),
            w in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let g = KnotGrid::equally_spaced(4).unwrap();
            let x = Matrix::from_row_major(xs.len(), 1, xs.clone()).unwrap();
            let e = expand_design(&x, &g).unwrap();
            let f = reconstruct_f(&w, &g, &xs).unwrap();
            for r in 0..xs.len() {
                let dot: f64 = e.row(r).iter().zip(&w).map(|(a, b)| a * b).sum();
                prop_assert!((dot - f[r]).abs() < 1e-12);
            }
        }

        #[test]
        fn reconstruction_is_continuous_piecewise_linear_and_zero_at_origin(
            w in proptest::collection::vec(-5.0f64..5.0, 5),
        ) {
            let g = KnotGrid::equally_spaced(5).unwrap();
            prop_assert_eq!(reconstruct_f(&w, &g, &[0.0]).unwrap()[0], 0.0);
            // between consecutive breakpoints, midpoints equal the chord average
            let mut bps: Vec<f64> = g.knots().to_vec();
            bps.push(1.0);
            for seg in bps.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let v = reconstruct_f(&w, &g, &[a, 0.5 * (a + b), b]).unwrap();
                prop_assert!((v[1] - 0.5 * (v[0] + v[2])).abs() < 1e-12);
            }
        }

        #[test]
        fn least_squares_recovers_weights(
            w in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let g = KnotGrid::equally_spaced(4).unwrap();
            // one point strictly inside each linear segment
            let pts = [0.1, 0.35, 0.6, 0.9];
            let y = reconstruct_f(&w, &g, &pts).unwrap();
            let x = Matrix::from_row_major(4, 1, pts.to_vec()).unwrap();
            let e = expand_design(&x, &g).unwrap();
            // normal equations
            let ata: Vec<Vec<f64>> = (0..4)
                .map(|i| (0..4).map(|j| (0..4).map(|r| e.get(r, i) * e.get(r, j)).sum()).collect())
                .collect();
            let aty: Vec<f64> = (0..4).map(|i| (0..4).map(|r| e.get(r, i) * y[r]).sum()).collect();
            let fit = solve(ata, aty);
            for (a, b) in fit.iter().zip(&w) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
