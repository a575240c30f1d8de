//! Split-R̂ and autocorrelation-based effective sample size.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::PosteriorDraws;
use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn check_shape(chains: &[Vec<f64>], min_chains: usize) -> Result<usize> {
    let n = chains.first().map_or(0, Vec::len);
    if chains.len() < min_chains || n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::TooFewDraws {
            chains: chains.len(),
            draws: n,
        });
    }
    Ok(n)
}

/// Potential scale reduction computed on chains split in half.
/// Identical constant chains give 1.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let n = check_shape(chains, 2)?;
    let half = n / 2;
    let mut pieces: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        pieces.push(&c[..half]);
        pieces.push(&c[n - half..]);
    }
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let w = pieces.iter().map(|p| sample_var(p)).sum::<f64>() / pieces.len() as f64;
    let b_over_n = sample_var(&means);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let h = half as f64;
    let var_plus = (h - 1.0) / h * w + b_over_n;
    Ok((var_plus / w).sqrt())
}

/// Biased autocovariance of `x` at lags `0..n`, via FFT.
fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf.iter().take(n).map(|c| c.re / (size as f64 * n as f64)).collect()
}

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// truncation of the summed autocorrelations. Constant input returns the
/// total draw count.
pub fn ess_chains(chains: &[Vec<f64>]) -> Result<f64> {
    let n = check_shape(chains, 1)?;
    let m = chains.len();
    let total = (n * m) as f64;
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c)).collect();
    let nf = n as f64;
    let chain_var: Vec<f64> = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).collect();
    let mean_var = mean(&chain_var);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
        var_plus += sample_var(&means);
    }
    if !(var_plus > 0.0) || mean_var == 0.0 {
        return Ok(total);
    }
    let mean_acov = |t: usize| acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut even = 1.0;
    let mut odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = odd;
    let mut t = 1;
    while t < n - 4 && even + odd > 0.0 {
        even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
        odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
        if even + odd >= 0.0 {
            rho[t + 1] = even;
            rho[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t + 1] = even;
    }
    // initial monotone sequence
    let mut t = 1;
    while t + 2 <= max_t {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let tau = -1.0 + 2.0 * rho[..max_t].iter().sum::<f64>() + rho[max_t + 1];
    Ok((total / tau).min(total * total.log10()))
}

pub fn rhat(draws: &PosteriorDraws, param: &str) -> Result<f64> {
    let j = draws.index_of(param)?;
    split_rhat(&draws.param_chains(j))
}

pub fn ess(draws: &PosteriorDraws, param: &str) -> Result<f64> {
    let j = draws.index_of(param)?;
    ess_chains(&draws.param_chains(j))
}
