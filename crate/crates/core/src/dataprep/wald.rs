use serde::Serialize;

use super::{binary_labels, Dataset, Transform};
use crate::error::{Error, Result};
use crate::math::inv_logit;

const MAX_NEWTON_ITERS: usize = 25;
const MAX_ABS_COEF: f64 = 15.0;

/// Univariate association statistic for one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldStat {
    pub z: f64,
    pub coefficient: f64,
    /// `true` when Newton hit the iteration cap or the coefficient clamp and
    /// the score statistic was substituted for the Wald statistic.
    pub score_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct ScreenResult {
    /// Retained columns, ordered by decreasing `|z|`.
    pub data: Dataset,
    /// Original column indices of the retained columns, same order as `data`.
    pub selected: Vec<usize>,
    /// Statistic for every input column, in input order.
    pub stats: Vec<WaldStat>,
}

/// Fits `logit P(y=1) = a + b x` by Newton's method and returns the Wald
/// statistic for `b`.
pub fn wald_z(x: &[f64], y: &[bool]) -> WaldStat {
    let n = x.len() as f64;
    let n_pos = y.iter().filter(|&&v| v).count() as f64;
    let ybar = n_pos / n;
    let mut a = (ybar / (1.0 - ybar)).ln();
    let mut b = 0.0;
    let mut converged = false;
    let mut clamped = false;
    for _ in 0..MAX_NEWTON_ITERS {
        let (mut ga, mut gb) = (0.0, 0.0);
        let mut info = [0.0; 3];
        for (&xi, &yi) in x.iter().zip(y) {
            let p = inv_logit(a + b * xi);
            let r = if yi { 1.0 - p } else { -p };
            let w = p * (1.0 - p);
            ga += r;
            gb += r * xi;
            info[0] += w;
            info[1] += w * xi;
            info[2] += w * xi * xi;
        }
        let det = info[0] * info[2] - info[1] * info[1];
        if !(det > 0.0) || !det.is_finite() {
            break;
        }
        let da = (info[2] * ga - info[1] * gb) / det;
        let db = (info[0] * gb - info[1] * ga) / det;
        a += da;
        b += db;
        if b.abs() > MAX_ABS_COEF {
            b = b.signum() * MAX_ABS_COEF;
            clamped = true;
            break;
        }
        if da.abs().max(db.abs()) < 1e-10 {
            converged = true;
            break;
        }
    }
    if converged && !clamped {
        // Information at the solution for the standard error.
        let mut info = [0.0; 3];
        for &xi in x {
            let p = inv_logit(a + b * xi);
            let w = p * (1.0 - p);
            info[0] += w;
            info[1] += w * xi;
            info[2] += w * xi * xi;
        }
        let det = info[0] * info[2] - info[1] * info[1];
        let var_b = info[0] / det;
        if var_b > 0.0 && var_b.is_finite() {
            return WaldStat {
                z: b / var_b.sqrt(),
                coefficient: b,
                score_fallback: false,
            };
        }
    }
    WaldStat {
        z: score_z(x, y),
        coefficient: b,
        score_fallback: true,
    }
}

/// Score statistic for `b = 0` at the intercept-only fit.
fn score_z(x: &[f64], y: &[bool]) -> f64 {
    let n = x.len() as f64;
    let ybar = y.iter().filter(|&&v| v).count() as f64 / n;
    let xbar = x.iter().sum::<f64>() / n;
    let u: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| xi * (if yi { 1.0 } else { 0.0 } - ybar))
        .sum();
    let sxx: f64 = x.iter().map(|&xi| (xi - xbar) * (xi - xbar)).sum();
    let info = ybar * (1.0 - ybar) * sxx;
    if info > 0.0 {
        u / info.sqrt()
    } else {
        0.0
    }
}

/// Ranks columns by `|z|` from univariate logistic fits and keeps the
/// `top_k` largest. Ties go to the lower column index.
pub fn wald_screen(data: &Dataset, top_k: usize) -> Result<ScreenResult> {
    let labels = binary_labels(&data.y)?;
    if labels.iter().all(|&v| v) || labels.iter().all(|&v| !v) {
        return Err(Error::SingleClass);
    }
    if top_k > data.p() {
        return Err(Error::TooMany {
            what: "screened columns",
            requested: top_k,
            available: data.p(),
        });
    }
    let stats: Vec<WaldStat> = (0..data.p())
        .map(|c| wald_z(&data.x.column(c), &labels))
        .collect();
    let mut order: Vec<usize> = (0..data.p()).collect();
    order.sort_by(|&i, &j| {
        stats[j]
            .z
            .abs()
            .total_cmp(&stats[i].z.abs())
            .then(i.cmp(&j))
    });
    order.truncate(top_k);
    let mut reduced = data.select_cols(&order);
    reduced.provenance.push(Transform::Screen);
    Ok(ScreenResult {
        data: reduced,
        selected: order,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::{standardize, Matrix};
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        y.shuffle(rng);
        y
    }

    #[test]
    fn converged_fit_matches_known_solution() {
        // Saturated two-level design: the MLE reproduces the cell log-odds.
        let x = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = vec![true, false, false, false, true, true, true, false];
        let s = wald_z(&x, &y);
        assert!(!s.score_fallback);
        let expected_b = 3f64.ln() - (1.0f64 / 3.0).ln();
        assert_abs_diff_eq!(s.coefficient, expected_b, epsilon = 1e-9);
        // se^2 = 1/(n p (1-p)) summed over both cells
        let se = (1.0f64 / (4.0 * 0.25 * 0.75) * 2.0).sqrt();
        assert_abs_diff_eq!(s.z, expected_b / se, epsilon = 1e-9);
    }

    #[test]
    fn separating_column_uses_score_statistic_and_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let y = labels(n, &mut rng);
        let sep: Vec<f64> = y
            .iter()
            .map(|&v| if v { 1.0 } else { -1.0 } + 0.2 * rng.random::<f64>())
            .collect();
        let strong: Vec<f64> = y
            .iter()
            .map(|&v| if v { 0.8 } else { -0.8 } + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let s = wald_z(&sep, &y);
        assert!(s.score_fallback);
        assert!(s.z.is_finite());
        assert_abs_diff_eq!(s.z, score_z(&sep, &y), epsilon = 1e-12);

        // independent score-test oracle: z = sqrt(n) * corr(x, y)
        let yf: Vec<f64> = y.iter().map(|&v| v as u8 as f64).collect();
        let mx = sep.iter().sum::<f64>() / n as f64;
        let my = yf.iter().sum::<f64>() / n as f64;
        let sxy: f64 = sep.iter().zip(&yf).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = sep.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = yf.iter().map(|b| (b - my).powi(2)).sum();
        assert_abs_diff_eq!(s.z, (n as f64).sqrt() * sxy / (sxx * syy).sqrt(), epsilon = 1e-10);

        let mut rows = Vec::new();
        for i in 0..n {
            rows.push(vec![strong[i], sep[i]]);
        }
        let yv = yf.clone();
        let d = standardize(&Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), yv).unwrap()).unwrap();
        let r = wald_screen(&d, 2).unwrap();
        assert_eq!(r.selected, vec![1, 0]);
    }

    #[test]
    fn independent_column_not_selected_ahead_of_associated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let mut noise_large = 0;
        for _ in 0..50 {
            let y = labels(n, &mut rng);
            let yf: Vec<f64> = y.iter().map(|&v| v as u8 as f64).collect();
            let mut rows = Vec::new();
            for &v in &y {
                let signal = if v { 1.0 } else { -1.0 } + rng.sample::<f64, _>(StandardNormal);
                rows.push(vec![rng.sample::<f64, _>(StandardNormal), signal]);
            }
            let d = standardize(&Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), yf).unwrap())
                .unwrap();
            let r = wald_screen(&d, 1).unwrap();
            assert_eq!(r.selected, vec![1]);
            if r.stats[0].z.abs() >= 3.0 {
                noise_large += 1;
            }
        }
        // P(|Z| >= 3) under the null is about 0.0027.
        assert!(noise_large <= 2, "{noise_large} null columns had |Z| >= 3");
    }

    #[test]
    fn top_k_equal_p_orders_by_abs_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 80;
        let y = labels(n, &mut rng);
        let yf: Vec<f64> = y.iter().map(|&v| v as u8 as f64).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&v| {
                let s = if v { 1.0 } else { -1.0 };
                (0..5)
                    .map(|k| s * 0.3 * k as f64 + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let d = Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), yf).unwrap();
        let r = wald_screen(&d, 5).unwrap();
        let mut sorted = r.selected.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        for w in r.selected.windows(2) {
            assert!(r.stats[w[0]].z.abs() >= r.stats[w[1]].z.abs());
        }
        assert_eq!(r.data.column_names[0], d.column_names[r.selected[0]]);
    }

    #[test]
    fn selection_invariant_to_positive_rescaling_before_standardizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 50;
        let y = labels(n, &mut rng);
        let yf: Vec<f64> = y.iter().map(|&v| v as u8 as f64).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&v| {
                (0..6)
                    .map(|k| (v as u8 as f64) * 0.2 * k as f64 + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let d = Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), yf).unwrap();
        let mut scaled = d.clone();
        for r in 0..n {
            scaled.x.set(r, 2, d.x.get(r, 2) * 1000.0);
            scaled.x.set(r, 4, d.x.get(r, 4) * 0.001);
        }
        let a = wald_screen(&standardize(&d).unwrap(), 3).unwrap();
        let b = wald_screen(&standardize(&scaled).unwrap(), 3).unwrap();
        assert_eq!(a.selected, b.selected);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = Dataset::unnamed(Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(), vec![1.0, 1.0])
            .unwrap();
        assert!(matches!(wald_screen(&d, 1), Err(Error::SingleClass)));
        let d = Dataset::unnamed(Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(), vec![1.0, 0.0])
            .unwrap();
        assert!(wald_screen(&d, 2).is_err());
    }
}
