//! Scalar helpers shared by the densities and the sampler.

use std::f64::consts::PI;

/// `0.5 * ln(2π)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Logistic sigmoid `1 / (1 + e^-x)`, evaluated without overflow for any `x`.
pub fn inv_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(inv_logit(x))`, accurate in both tails.
pub fn log_inv_logit(x: f64) -> f64 {
    -softplus(-x)
}

/// Log density of `N(mean, sd^2)` at `x`.
pub fn normal_lpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -HALF_LN_2PI - sd.ln() - 0.5 * z * z
}

/// Normal log density where the scale is supplied on the log scale.
///
/// Returns the value together with the partial derivatives with respect to
/// `x` and to `log_sd`. Keeping the scale in log space lets the
/// hierarchical priors handle scales near `e^-300` without underflow.
pub fn normal_lpdf_log_scale(x: f64, log_sd: f64) -> (f64, f64, f64) {
    let z = x * (-log_sd).exp();
    let value = -HALF_LN_2PI - log_sd - 0.5 * z * z;
    let d_x = -z * (-log_sd).exp();
    let d_log_sd = z * z - 1.0;
    (value, d_x, d_log_sd)
}

pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(2/π)`, the normalizing constant of the standard half-Cauchy density.
pub fn ln_half_cauchy_norm() -> f64 {
    (2.0 / PI).ln()
}
