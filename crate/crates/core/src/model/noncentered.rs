//! Non-centered sampling coordinates for the shrinkage coefficients.
//!
//! Each coefficient is written as `θ = s(λ̃) z` where `s` is its full slab
//! scale (`τ λ`, `τ λ_G λ`, `τ λ_1 λ_k`, or `τ exp(a)` for the horseshoe).
//! The sampler moves in `(z, λ̃, ...)`; the density is the model density at
//! `θ(z)` plus `log s`. Draws are mapped back before they are returned, so
//! the posterior is unchanged.

use serde::{Deserialize, Serialize};

use super::{likelihood, prior, LogDensity, Model, ModelSpec, Prior};
use crate::math::{inv_logit, ln_half_cauchy_norm, normal_lpdf, softplus, HALF_LN_2PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// Sample the model's own coordinates `(θ, λ̃)`.
    Centered,
    /// Sample `z = θ / s(λ̃)` in place of each coefficient.
    #[default]
    NonCentered,
}

#[derive(Debug, Clone, Copy)]
enum ScaleKind {
    /// `λ̃ ~ N(mu, sigma²)`, contributing `log inv_logit(λ̃)` to the scale.
    Logit { mu: f64, sigma: f64 },
    /// Horseshoe `a = log λ` with `λ ~ C⁺(0, 1)`, contributing `a`.
    Log,
}

#[derive(Debug, Clone, Copy)]
struct ScaleParam {
    index: usize,
    kind: ScaleKind,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    coef: usize,
    /// Positions in `ScaleMap::params`; the second is optional.
    scales: [usize; 2],
    n_scales: usize,
}

impl Entry {
    fn new(coef: usize, scales: &[usize]) -> Self {
        let mut e = Entry {
            coef,
            scales: [0; 2],
            n_scales: scales.len(),
        };
        e.scales[..scales.len()].copy_from_slice(scales);
        e
    }

    fn scales(&self) -> &[usize] {
        &self.scales[..self.n_scales]
    }
}

/// Coefficient positions and the scale parameters multiplying into each.
#[derive(Debug, Clone)]
pub struct ScaleMap {
    log_tau: f64,
    params: Vec<ScaleParam>,
    entries: Vec<Entry>,
}

impl ScaleMap {
    pub fn new(spec: &ModelSpec) -> Self {
        let l = spec.layout();
        let h = &spec.hyper;
        let logit = |index: usize, (mu, sigma): (f64, f64)| ScaleParam {
            index,
            kind: ScaleKind::Logit { mu, sigma },
        };
        let mut params = Vec::new();
        let mut entries = Vec::new();
        match &spec.prior {
            Prior::LncassBasic => {
                for i in 0..spec.p {
                    params.push(logit(l.scale.start + i, h.logit_normal(i)));
                    entries.push(Entry::new(l.coef.start + i, &[i]));
                }
            }
            Prior::Horseshoe => {
                for i in 0..spec.p {
                    params.push(ScaleParam {
                        index: l.scale.start + i,
                        kind: ScaleKind::Log,
                    });
                    entries.push(Entry::new(l.coef.start + i, &[i]));
                }
            }
            Prior::LncassGrouped { groups } => {
                let ng = l.group_coef.len();
                for g in 0..ng {
                    params.push(logit(l.group_scale.start + g, (h.mu_lambda, h.sigma_lambda)));
                    entries.push(Entry::new(l.group_coef.start + g, &[g]));
                }
                for (i, &g) in groups.iter().enumerate() {
                    params.push(logit(l.scale.start + i, h.logit_normal(i)));
                    entries.push(Entry::new(l.coef.start + i, &[g, ng + i]));
                }
            }
            Prior::LncassGam { knots } => {
                let m = knots.len();
                for i in 0..spec.p {
                    for k in 0..m {
                        let j = i * m + k;
                        params.push(logit(l.scale.start + j, h.logit_normal(i)));
                        if k == 0 {
                            entries.push(Entry::new(l.coef.start + j, &[j]));
                        } else {
                            entries.push(Entry::new(l.coef.start + j, &[i * m, j]));
                        }
                    }
                }
            }
        }
        ScaleMap {
            log_tau: spec.hyper.tau.ln(),
            params,
            entries,
        }
    }

    /// Per scale parameter: its log contribution to the slab scale and the
    /// derivative of that contribution.
    fn log_factors(&self, u: &[f64]) -> Vec<(f64, f64)> {
        self.params
            .iter()
            .map(|sp| {
                let x = u[sp.index];
                match sp.kind {
                    ScaleKind::Logit { .. } => {
                        // log inv_logit(x) and 1 - inv_logit(x) from one exp
                        let e = (-x.abs()).exp();
                        if x >= 0.0 {
                            (-e.ln_1p(), e / (1.0 + e))
                        } else {
                            (x - e.ln_1p(), 1.0 / (1.0 + e))
                        }
                    }
                    ScaleKind::Log => (x, 1.0),
                }
            })
            .collect()
    }

    fn log_scale(&self, e: &Entry, factors: &[(f64, f64)]) -> f64 {
        self.log_tau + e.scales().iter().map(|&k| factors[k].0).sum::<f64>()
    }

    /// Sampling coordinates to model coordinates.
    pub fn to_model(&self, u: &[f64]) -> Vec<f64> {
        let f = self.log_factors(u);
        let mut v = u.to_vec();
        for e in &self.entries {
            v[e.coef] = u[e.coef] * self.log_scale(e, &f).exp();
        }
        v
    }

    /// Model coordinates to sampling coordinates.
    pub fn from_model(&self, v: &[f64]) -> Vec<f64> {
        let f = self.log_factors(v);
        let mut u = v.to_vec();
        for e in &self.entries {
            u[e.coef] = v[e.coef] * (-self.log_scale(e, &f)).exp();
        }
        u
    }
}

/// A model's posterior density expressed in non-centered coordinates.
///
/// Equal to the model density at `θ(z)` plus `Σ log s`; the slab terms are
/// evaluated directly as standard normal densities of `z`, which is where
/// the Gaussian normalizer and the Jacobian cancel.
pub struct NonCentered<'a> {
    model: &'a Model,
    map: ScaleMap,
}

impl<'a> NonCentered<'a> {
    pub fn new(model: &'a Model) -> Self {
        NonCentered {
            map: ScaleMap::new(&model.spec),
            model,
        }
    }

    pub fn map(&self) -> &ScaleMap {
        &self.map
    }
}

impl LogDensity for NonCentered<'_> {
    fn dim(&self) -> usize {
        self.model.spec.dim()
    }

    fn log_density_grad(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let map = &self.map;
        let factors = map.log_factors(u);
        let scales: Vec<f64> = map.entries.iter().map(|e| map.log_scale(e, &factors).exp()).collect();
        let mut v = u.to_vec();
        for (e, &s) in map.entries.iter().zip(&scales) {
            v[e.coef] = u[e.coef] * s;
        }

        grad.iter_mut().for_each(|g| *g = 0.0);
        let spec = &self.model.spec;
        let mut total = likelihood::accumulate(spec, &self.model.design, &self.model.y, &v, grad);
        total += prior::accumulate_nuisance(spec, &v, grad);

        for (e, &s) in map.entries.iter().zip(&scales) {
            let z = u[e.coef];
            let g_theta = grad[e.coef];
            total += -HALF_LN_2PI - 0.5 * z * z;
            grad[e.coef] = g_theta * s - z;
            let pull = g_theta * v[e.coef];
            for &k in e.scales() {
                grad[map.params[k].index] += pull * factors[k].1;
            }
        }
        let cauchy_norm = ln_half_cauchy_norm();
        for sp in &map.params {
            let x = u[sp.index];
            match sp.kind {
                ScaleKind::Logit { mu, sigma } => {
                    total += normal_lpdf(x, mu, sigma);
                    grad[sp.index] -= (x - mu) / (sigma * sigma);
                }
                ScaleKind::Log => {
                    total += cauchy_norm - softplus(2.0 * x) + x;
                    grad[sp.index] += 1.0 - 2.0 * inv_logit(2.0 * x);
                }
            }
        }
        total
    }
}
