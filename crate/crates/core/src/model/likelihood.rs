use super::{Likelihood, Model, ModelSpec, ParameterVector, Prior};
use crate::dataprep::{Dataset, Matrix};
use crate::error::Result;
use crate::math::{softplus, HALF_LN_2PI};

/// Log likelihood of `data` under `spec` at `params`.
pub fn log_likelihood(spec: &ModelSpec, data: &Dataset, params: &ParameterVector) -> Result<f64> {
    Model::new(spec.clone(), data)?.log_likelihood(params)
}

/// Adds the log likelihood gradient to `grad` and returns its value.
/// `design` is the (possibly basis-expanded) design matrix.
pub(super) fn accumulate(spec: &ModelSpec, design: &Matrix, y: &[f64], q: &[f64], grad: &mut [f64]) -> f64 {
    let l = spec.layout();
    let width = design.cols();
    let b0 = q[l.intercept];

    // Effective coefficients over the design columns.
    let mut beta = q[l.coef.clone()].to_vec();
    if let Prior::LncassGrouped { groups } = &spec.prior {
        for (b, &g) in beta.iter_mut().zip(groups) {
            *b += q[l.group_coef.start + g];
        }
    }

    let mut d_beta = vec![0.0; width];
    let mut d_b0 = 0.0;
    let mut total = 0.0;
    match spec.likelihood {
        Likelihood::GaussianLinear => {
            let ix = l.log_sigma.expect("linear model has a noise scale");
            let log_sigma = q[ix];
            let inv_var = (-2.0 * log_sigma).exp();
            let mut ss = 0.0;
            for (r, &yr) in y.iter().enumerate() {
                let row = design.row(r);
                let eta = b0 + dot(row, &beta);
                let resid = yr - eta;
                ss += resid * resid;
                let w = resid * inv_var;
                d_b0 += w;
                axpy(w, row, &mut d_beta);
            }
            let n = y.len() as f64;
            total = -n * (HALF_LN_2PI + log_sigma) - 0.5 * ss * inv_var;
            grad[ix] += -n + ss * inv_var;
        }
        Likelihood::BernoulliLogit => {
            for (r, &yr) in y.iter().enumerate() {
                let row = design.row(r);
                let eta = b0 + dot(row, &beta);
                // y η - log(1 + e^η)
                total += yr * eta - softplus(eta);
                let w = yr - crate::math::inv_logit(eta);
                d_b0 += w;
                axpy(w, row, &mut d_beta);
            }
        }
    }

    grad[l.intercept] += d_b0;
    for (g, d) in grad[l.coef.clone()].iter_mut().zip(&d_beta) {
        *g += d;
    }
    if let Prior::LncassGrouped { groups } = &spec.prior {
        for (d, &g) in d_beta.iter().zip(groups) {
            grad[l.group_coef.start + g] += d;
        }
    }
    total
}

/// Four independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gam_basis::KnotGrid;
    use crate::model::HyperParams;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, p: usize, binary: bool, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
        let y = (0..n)
            .map(|_| {
                if binary {
                    f64::from(rng.random_bool(0.4))
                } else {
                    rng.random_range(-2.0..2.0)
                }
            })
            .collect();
        Dataset::unnamed(Matrix::from_row_major(n, p, x).unwrap(), y).unwrap()
    }

    fn spec(lik: Likelihood, prior: Prior, p: usize, n: usize) -> ModelSpec {
        ModelSpec::new(lik, prior, HyperParams::default(), p, n).unwrap()
    }

    #[test]
    fn logistic_at_zero_is_n_log_half() {
        let d = data(7, 3, true, 1);
        let s = spec(Likelihood::BernoulliLogit, Prior::LncassBasic, 3, 7);
        let v = log_likelihood(&s, &d, &ParameterVector::zeros(&s)).unwrap();
        assert_abs_diff_eq!(v, 7.0 * 0.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_exact_fit_unit_sigma() {
        let mut d = data(5, 2, false, 2);
        let s = spec(Likelihood::GaussianLinear, Prior::Horseshoe, 2, 5);
        let mut pv = ParameterVector::zeros(&s);
        let l = s.layout();
        pv.values[l.coef.start] = 0.7;
        pv.values[l.coef.start + 1] = -1.2;
        pv.values[l.intercept] = 0.3;
        for r in 0..5 {
            d.y[r] = 0.3 + 0.7 * d.x.get(r, 0) - 1.2 * d.x.get(r, 1);
        }
        let v = log_likelihood(&s, &d, &pv).unwrap();
        assert_abs_diff_eq!(v, -2.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
    }

    #[test]
    fn matches_direct_oracle_for_every_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, p) = (9, 4);
        let priors = [
            Prior::LncassBasic,
            Prior::LncassGrouped {
                groups: vec![0, 0, 1, 1],
            },
            Prior::LncassGam {
                knots: KnotGrid::equally_spaced(3).unwrap(),
            },
            Prior::Horseshoe,
        ];
        for prior in priors {
            for lik in [Likelihood::GaussianLinear, Likelihood::BernoulliLogit] {
                let d = data(n, p, lik == Likelihood::BernoulliLogit, rng.random());
                let s = spec(lik, prior.clone(), p, n);
                let q: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
                let pv = ParameterVector::new(&s, q.clone()).unwrap();
                let v = log_likelihood(&s, &d, &pv).unwrap();

                // oracle: rebuild η from names and raw formulas
                let get = |name: &str| pv.get(name).unwrap();
                let mut oracle = 0.0;
                for r in 0..n {
                    let mut eta = get("intercept");
                    for i in 0..p {
                        let x = d.x.get(r, i);
                        eta += match &prior {
                            Prior::LncassGam { knots } => knots
                                .knots()
                                .iter()
                                .enumerate()
                                .map(|(k, &kn)| {
                                    let phi = if x <= kn { 0.0 } else { (x - kn) / (1.0 - kn) };
                                    get(&format!("omega[{},{}]", k + 1, i + 1)) * phi
                                })
                                .sum::<f64>(),
                            Prior::LncassGrouped { groups } => {
                                x * (get(&format!("theta[{}]", i + 1))
                                    + get(&format!("theta_group[{}]", groups[i] + 1)))
                            }
                            _ => x * get(&format!("theta[{}]", i + 1)),
                        };
                    }
                    oracle += match lik {
                        Likelihood::GaussianLinear => {
                            let sd = get("log_sigma").exp();
                            -0.5 * (2.0 * std::f64::consts::PI).ln()
                                - sd.ln()
                                - (d.y[r] - eta).powi(2) / (2.0 * sd * sd)
                        }
                        Likelihood::BernoulliLogit => {
                            let pr = 1.0 / (1.0 + (-eta).exp());
                            d.y[r] * pr.ln() + (1.0 - d.y[r]) * (1.0 - pr).ln()
                        }
                    };
                }
                assert_abs_diff_eq!(v, oracle, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn logistic_extreme_predictor_is_finite() {
        let d = Dataset::unnamed(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![0.0]).unwrap();
        let s = spec(Likelihood::BernoulliLogit, Prior::LncassBasic, 1, 1);
        let mut pv = ParameterVector::zeros(&s);
        pv.values[0] = 800.0;
        let v = log_likelihood(&s, &d, &pv).unwrap();
        assert_abs_diff_eq!(v, -800.0, epsilon = 1e-9);
    }
}
