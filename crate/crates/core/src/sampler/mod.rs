//! Multi-chain No-U-Turn sampling with windowed warmup adaptation.
//!
//! Each chain draws from its own ChaCha8 stream (`seed`, stream = chain
//! index), so output is identical whether chains run serially or in
//! parallel.

mod adapt;
mod diagnostics;
mod leapfrog;
mod nuts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{ess, ess_chains, rhat, split_rhat};
pub use leapfrog::{leapfrog, LeapfrogResult, Metric};

use crate::dataprep::Dataset;
use crate::error::{Error, Result};
use crate::model::{LogDensity, Model, ModelSpec, NonCentered, Parameterization};
use adapt::{metric_window_ends, DualAveraging, Welford};
use leapfrog::Point;

/// Name of the per-chain generator, recorded with the draws.
pub const GENERATOR: &str = "ChaCha8Rng(seed_from_u64(seed), stream = chain index)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
    /// Coordinates the chains move in; draws are always reported in the
    /// model's own coordinates.
    #[serde(default)]
    pub parameterization: Parameterization,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 1000,
            draws: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 42,
            parameterization: Parameterization::NonCentered,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.warmup == 0 || self.draws == 0 || self.max_tree_depth == 0 {
            return Err(Error::InvalidConfig(
                "chains, warmup, draws and max_tree_depth must all be at least 1".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub mean_accept_stat: f64,
    /// Divergent post-warmup transitions.
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub mean_tree_depth: f64,
    pub total_leapfrog_steps: usize,
}

/// Post-warmup draws, `chains × draws × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    names: Vec<String>,
    draws: usize,
    /// One buffer per chain, row-major `draws × dim`.
    chains: Vec<Vec<f64>>,
    pub stats: Vec<ChainStats>,
    pub generator: String,
}

impl PosteriorDraws {
    /// Wraps externally produced chains. Each inner vector is row-major
    /// `draws × names.len()`.
    pub fn new(names: Vec<String>, chains: Vec<Vec<f64>>) -> Result<Self> {
        let dim = names.len();
        let len = chains.first().map_or(0, Vec::len);
        if dim == 0 || len % dim != 0 || chains.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch {
                what: "chain buffers",
                expected: len,
                got: chains.iter().map(Vec::len).find(|&l| l != len).unwrap_or(len),
            });
        }
        Ok(PosteriorDraws {
            names,
            draws: len / dim,
            chains,
            stats: Vec::new(),
            generator: String::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.draws
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    /// Draw `d` of chain `c` as a full parameter vector.
    pub fn draw(&self, c: usize, d: usize) -> &[f64] {
        let dim = self.dim();
        &self.chains[c][d * dim..(d + 1) * dim]
    }

    /// Per-chain traces of one parameter.
    pub fn param_chains(&self, j: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains())
            .map(|c| (0..self.draws).map(|d| self.draw(c, d)[j]).collect())
            .collect()
    }

    pub fn total_divergences(&self) -> usize {
        self.stats.iter().map(|s| s.divergences).sum()
    }

    /// Every draw in chain order, then draw order.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let dim = self.dim();
        self.chains.iter().flat_map(move |c| c.chunks(dim))
    }

    /// Applies `f` to every draw, producing a derived draw set.
    pub fn map_draws(&self, names: Vec<String>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let chains = self
            .chains
            .iter()
            .map(|c| c.chunks(self.dim()).flat_map(&f).collect())
            .collect();
        let mut out = PosteriorDraws::new(names, chains)?;
        out.stats = self.stats.clone();
        out.generator = self.generator.clone();
        Ok(out)
    }
}

/// Fits `spec` to `data` with NUTS.
pub fn sample(spec: &ModelSpec, data: &Dataset, config: &SamplerConfig) -> Result<PosteriorDraws> {
    let model = Model::new(spec.clone(), data)?;
    let names = spec.parameter_names();
    match config.parameterization {
        Parameterization::Centered => sample_target(&model, names, config),
        Parameterization::NonCentered => {
            let target = NonCentered::new(&model);
            let raw = sample_target(&target, names.clone(), config)?;
            raw.map_draws(names, |u| target.map().to_model(u))
        }
    }
}

/// Samples any differentiable target.
pub fn sample_target<T: LogDensity>(target: &T, names: Vec<String>, config: &SamplerConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    let dim = target.dim();
    if dim == 0 {
        return Err(Error::InvalidConfig("target has dimension 0".into()));
    }
    if names.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "parameter names",
            expected: dim,
            got: names.len(),
        });
    }
    let results: Vec<Result<(Vec<f64>, ChainStats)>> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect();
    let mut chains = Vec::with_capacity(config.chains);
    let mut stats = Vec::with_capacity(config.chains);
    for r in results {
        let (draws, s) = r?;
        chains.push(draws);
        stats.push(s);
    }
    let mut out = PosteriorDraws::new(names, chains)?;
    out.stats = stats;
    out.generator = GENERATOR.to_string();
    Ok(out)
}

/// Generator for `chain`: seeded from `seed` on its own stream.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn initial_point<T: LogDensity>(target: &T, rng: &mut ChaCha8Rng) -> Point {
    let dim = target.dim();
    let mut last = None;
    for _ in 0..100 {
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pt = Point::new(target, q, vec![0.0; dim]);
        if pt.logp.is_finite() && pt.grad.iter().all(|g| g.is_finite()) {
            return pt;
        }
        last = Some(pt);
    }
    last.expect("at least one attempt")
}

/// Doubles or halves `eps` until a single leapfrog step's acceptance
/// crosses 0.8.
fn find_reasonable_step<T: LogDensity>(target: &T, current: &Point, mut eps: f64, metric: &Metric, rng: &mut ChaCha8Rng) -> f64 {
    let log_target = 0.8f64.ln();
    let trial = |eps: f64, rng: &mut ChaCha8Rng| -> f64 {
        let mut pt = current.clone();
        for (p, m) in pt.p.iter_mut().zip(&metric.inv_mass) {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            *p = z / m.sqrt();
        }
        let h0 = pt.hamiltonian(metric);
        if !pt.step(target, eps, metric) {
            return f64::NEG_INFINITY;
        }
        let dh = h0 - pt.hamiltonian(metric);
        if dh.is_nan() {
            f64::NEG_INFINITY
        } else {
            dh
        }
    };
    let up = trial(eps, rng) > log_target;
    for _ in 0..60 {
        eps = if up { eps * 2.0 } else { eps * 0.5 };
        let dh = trial(eps, rng);
        if (up && !(dh > log_target)) || (!up && dh > log_target) {
            break;
        }
    }
    eps
}

fn run_chain<T: LogDensity>(target: &T, config: &SamplerConfig, chain: usize) -> Result<(Vec<f64>, ChainStats)> {
    let dim = target.dim();
    let mut rng = chain_rng(config.seed, chain);
    let mut current = initial_point(target, &mut rng);
    let mut metric = Metric::unit(dim);
    let mut eps = find_reasonable_step(target, &current, 1.0, &metric, &mut rng);
    let mut da = DualAveraging::new(config.target_accept, eps);
    let windows = metric_window_ends(config.warmup);
    let mut window_idx = 0;
    let mut welford = Welford::new(dim);
    let mut warmup_divergences = 0;

    for it in 0..config.warmup {
        let (next, st) = nuts::transition(target, &current, eps, &metric, config.max_tree_depth, &mut rng);
        current = next;
        if st.divergent {
            warmup_divergences += 1;
        }
        eps = da.update(st.accept_stat);

        if let Some(&(start, end)) = windows.get(window_idx) {
            if it >= start && it <= end {
                welford.add(&current.q);
            }
            if it == end {
                metric = Metric {
                    inv_mass: welford.regularized_variance(),
                };
                welford = Welford::new(dim);
                window_idx += 1;
                eps = find_reasonable_step(target, &current, eps, &metric, &mut rng);
                da.restart(eps);
            }
        }
    }
    if warmup_divergences == config.warmup {
        return Err(Error::AllDivergent);
    }
    eps = da.final_step_size();

    let mut draws = Vec::with_capacity(config.draws * dim);
    let mut divergences = 0;
    let mut sum_accept = 0.0;
    let mut sum_depth = 0.0;
    let mut total_leapfrog = 0;
    for _ in 0..config.draws {
        let (next, st) = nuts::transition(target, &current, eps, &metric, config.max_tree_depth, &mut rng);
        current = next;
        draws.extend_from_slice(&current.q);
        divergences += usize::from(st.divergent);
        sum_accept += st.accept_stat;
        sum_depth += st.depth as f64;
        total_leapfrog += st.n_leapfrog;
    }
    let n = config.draws as f64;
    Ok((
        draws,
        ChainStats {
            step_size: eps,
            inv_mass: metric.inv_mass,
            mean_accept_stat: sum_accept / n,
            divergences,
            warmup_divergences,
            mean_tree_depth: sum_depth / n,
            total_leapfrog_steps: total_leapfrog,
        },
    ))
}
