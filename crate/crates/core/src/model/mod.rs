//! Log-posterior densities and analytic gradients in the unconstrained
//! sampling space.
//!
//! Inclusion weights are sampled as `λ̃ = logit(λ)` with a normal prior
//! placed directly on `λ̃`, the regression noise scale as `log σ`, and the
//! horseshoe local scales as `log λ`.

mod likelihood;
mod noncentered;
mod prior;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataprep::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::gam_basis::{expand_design, KnotGrid};
use crate::math::{inv_logit, logit};

pub use likelihood::log_likelihood;
pub use noncentered::{NonCentered, Parameterization, ScaleMap};
pub use prior::{
    log_prior_horseshoe, log_prior_lncass_basic, log_prior_lncass_gam, log_prior_lncass_grouped,
};

/// LN-CASS hyperparameters plus the vague priors on the intercept and the
/// noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Slab standard deviation.
    pub tau: f64,
    /// Location of `λ̃`; `logit(a)` for prior inclusion probability `a`.
    pub mu_lambda: f64,
    /// Spread of `λ̃`.
    pub sigma_lambda: f64,
    pub intercept_sd: f64,
    /// Half-normal scale on the regression noise standard deviation.
    pub noise_scale_sd: f64,
    /// Optional per-covariate overrides of `(mu_lambda, sigma_lambda)` for
    /// covariate-level inclusion weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_covariate: Option<Vec<(f64, f64)>>,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            tau: 5.0,
            mu_lambda: 0.0,
            sigma_lambda: 10.0,
            intercept_sd: 10.0,
            noise_scale_sd: 5.0,
            per_covariate: None,
        }
    }
}

impl HyperParams {
    /// Defaults with `mu_lambda = logit(a)`.
    pub fn with_inclusion_probability(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidHyperParameter {
                name: "a",
                value: a,
                reason: "prior inclusion probability must lie in (0, 1)",
            });
        }
        Ok(HyperParams {
            mu_lambda: logit(a),
            ..HyperParams::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau", self.tau),
            ("sigma_lambda", self.sigma_lambda),
            ("intercept_sd", self.intercept_sd),
            ("noise_scale_sd", self.noise_scale_sd),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidHyperParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !self.mu_lambda.is_finite() {
            return Err(Error::InvalidHyperParameter {
                name: "mu_lambda",
                value: self.mu_lambda,
                reason: "must be finite",
            });
        }
        if let Some(per) = &self.per_covariate {
            for &(mu, sigma) in per {
                if !mu.is_finite() {
                    return Err(Error::InvalidHyperParameter {
                        name: "mu_lambda",
                        value: mu,
                        reason: "must be finite",
                    });
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidHyperParameter {
                        name: "sigma_lambda",
                        value: sigma,
                        reason: "must be positive and finite",
                    });
                }
            }
        }
        Ok(())
    }

    /// `(mu_lambda, sigma_lambda)` for covariate `i`.
    pub fn logit_normal(&self, i: usize) -> (f64, f64) {
        match &self.per_covariate {
            Some(per) => per[i],
            None => (self.mu_lambda, self.sigma_lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Likelihood {
    GaussianLinear,
    BernoulliLogit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prior {
    LncassBasic,
    /// `groups[i]` is the group of covariate `i`; groups are numbered
    /// `0..G` with no gaps.
    LncassGrouped { groups: Vec<usize> },
    LncassGam { knots: KnotGrid },
    Horseshoe,
}

/// Likelihood, prior structure and dimensions of a regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub likelihood: Likelihood,
    pub prior: Prior,
    pub hyper: HyperParams,
    pub p: usize,
    pub n: usize,
}

/// Maps group labels (any integers) onto contiguous indices `0..G`,
/// numbering groups by ascending label.
pub fn compact_groups(labels: &[i64]) -> Vec<usize> {
    let mut uniq: Vec<i64> = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    labels
        .iter()
        .map(|l| uniq.binary_search(l).expect("label present"))
        .collect()
}

impl ModelSpec {
    pub fn new(likelihood: Likelihood, prior: Prior, hyper: HyperParams, p: usize, n: usize) -> Result<Self> {
        let spec = ModelSpec {
            likelihood,
            prior,
            hyper,
            p,
            n,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if let Some(per) = &self.hyper.per_covariate {
            if per.len() != self.p {
                return Err(Error::DimensionMismatch {
                    what: "per-covariate hyperparameters",
                    expected: self.p,
                    got: per.len(),
                });
            }
        }
        match &self.prior {
            Prior::LncassGrouped { groups } => {
                if groups.len() != self.p {
                    return Err(Error::MissingGroup {
                        index: groups.len().min(self.p),
                    });
                }
                let g = self.n_groups();
                let mut used = vec![false; g];
                for &gi in groups {
                    used[gi] = true;
                }
                if let Some(empty) = used.iter().position(|u| !u) {
                    return Err(Error::Format(format!(
                        "group {empty} has no covariates; group indices must be contiguous"
                    )));
                }
            }
            Prior::LncassGam { knots } => {
                // re-run grid validation in case the spec was deserialized
                KnotGrid::new(knots.knots().to_vec())?;
            }
            Prior::LncassBasic | Prior::Horseshoe => {}
        }
        Ok(())
    }

    pub fn n_groups(&self) -> usize {
        match &self.prior {
            Prior::LncassGrouped { groups } => groups.iter().max().map_or(0, |g| g + 1),
            _ => 0,
        }
    }

    /// Basis functions per covariate (1 unless the prior is the GAM prior).
    pub fn basis_size(&self) -> usize {
        match &self.prior {
            Prior::LncassGam { knots } => knots.len(),
            _ => 1,
        }
    }

    pub fn layout(&self) -> Layout {
        let g = self.n_groups();
        let width = self.p * self.basis_size();
        let group_coef = 0..g;
        let group_scale = g..2 * g;
        let coef = 2 * g..2 * g + width;
        let scale = coef.end..coef.end + width;
        let intercept = scale.end;
        let log_sigma = match self.likelihood {
            Likelihood::GaussianLinear => Some(intercept + 1),
            Likelihood::BernoulliLogit => None,
        };
        Layout {
            group_coef,
            group_scale,
            coef,
            scale,
            intercept,
            log_sigma,
            dim: intercept + 1 + usize::from(log_sigma.is_some()),
        }
    }

    pub fn dim(&self) -> usize {
        self.layout().dim
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let l = self.layout();
        let mut names = Vec::with_capacity(l.dim);
        let g = self.n_groups();
        names.extend((1..=g).map(|i| format!("theta_group[{i}]")));
        names.extend((1..=g).map(|i| format!("lambda_tilde_group[{i}]")));
        match &self.prior {
            Prior::LncassGam { knots } => {
                let m = knots.len();
                for i in 1..=self.p {
                    names.extend((1..=m).map(|k| format!("omega[{k},{i}]")));
                }
                for i in 1..=self.p {
                    names.extend((1..=m).map(|k| format!("lambda_tilde[{k},{i}]")));
                }
            }
            Prior::Horseshoe => {
                names.extend((1..=self.p).map(|i| format!("theta[{i}]")));
                names.extend((1..=self.p).map(|i| format!("log_lambda[{i}]")));
            }
            Prior::LncassBasic | Prior::LncassGrouped { .. } => {
                names.extend((1..=self.p).map(|i| format!("theta[{i}]")));
                names.extend((1..=self.p).map(|i| format!("lambda_tilde[{i}]")));
            }
        }
        names.push("intercept".into());
        if l.log_sigma.is_some() {
            names.push("log_sigma".into());
        }
        names
    }

    /// Regression coefficients `β` implied by an unconstrained parameter
    /// vector. For the GAM prior these are the basis weights in
    /// covariate-major order.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let l = self.layout();
        let mut beta = values[l.coef.clone()].to_vec();
        if let Prior::LncassGrouped { groups } = &self.prior {
            for (b, &g) in beta.iter_mut().zip(groups) {
                *b += values[l.group_coef.start + g];
            }
        }
        beta
    }

    /// Linear predictor for the rows of `x` (raw covariates; the GAM basis is
    /// expanded here).
    pub fn linear_predictor(&self, values: &[f64], x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.p {
            return Err(Error::DimensionMismatch {
                what: "covariate columns",
                expected: self.p,
                got: x.cols(),
            });
        }
        let design = self.design(x)?;
        let beta = self.coefficients(values);
        let b0 = values[self.layout().intercept];
        Ok((0..design.rows())
            .map(|r| b0 + design.row(r).iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }

    fn design(&self, x: &Matrix) -> Result<Matrix> {
        match &self.prior {
            Prior::LncassGam { knots } => expand_design(x, knots),
            _ => Ok(x.clone()),
        }
    }
}

/// Offsets of each parameter block in the flat unconstrained vector.
///
/// Order: group coefficients, group `λ̃`, coefficients (or GAM weights),
/// their scale parameters, intercept, then `log σ` for the linear model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub group_coef: Range<usize>,
    pub group_scale: Range<usize>,
    pub coef: Range<usize>,
    pub scale: Range<usize>,
    pub intercept: usize,
    pub log_sigma: Option<usize>,
    pub dim: usize,
}

/// A point in the unconstrained sampling space with its parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
}

impl ParameterVector {
    pub fn new(spec: &ModelSpec, values: Vec<f64>) -> Result<Self> {
        let dim = spec.dim();
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("parameter vector contains non-finite entries".into()));
        }
        Ok(ParameterVector {
            values,
            names: spec.parameter_names(),
        })
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        ParameterVector {
            values: vec![0.0; spec.dim()],
            names: spec.parameter_names(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogDensityResult {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// A differentiable unnormalized log density on `R^dim`.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density.
    /// Non-finite return values are treated as divergent by the sampler.
    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;
}

/// A [`ModelSpec`] bound to its data, ready for repeated density evaluation.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    design: Matrix,
    y: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec, data: &Dataset) -> Result<Self> {
        spec.validate()?;
        if data.p() != spec.p {
            return Err(Error::DimensionMismatch {
                what: "covariate count",
                expected: spec.p,
                got: data.p(),
            });
        }
        if data.n() != spec.n {
            return Err(Error::DimensionMismatch {
                what: "observation count",
                expected: spec.n,
                got: data.n(),
            });
        }
        if !data.is_complete() {
            return Err(Error::NonFiniteData);
        }
        if spec.likelihood == Likelihood::BernoulliLogit {
            crate::dataprep::binary_labels(&data.y)?;
        }
        let design = spec.design(&data.x)?;
        Ok(Model {
            spec,
            design,
            y: data.y.clone(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn check(&self, params: &ParameterVector) -> Result<()> {
        if params.values.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.spec.dim(),
                got: params.values.len(),
            });
        }
        Ok(())
    }

    pub fn log_likelihood(&self, params: &ParameterVector) -> Result<f64> {
        self.check(params)?;
        let mut grad = vec![0.0; params.values.len()];
        Ok(likelihood::accumulate(&self.spec, &self.design, &self.y, &params.values, &mut grad))
    }

    /// Shrinkage prior on the coefficients (excludes intercept and noise
    /// priors).
    pub fn log_prior(&self, params: &ParameterVector) -> Result<f64> {
        self.check(params)?;
        let mut grad = vec![0.0; params.values.len()];
        Ok(prior::accumulate(&self.spec, &params.values, &mut grad))
    }

    /// Intercept and noise-scale priors, including the `log σ` Jacobian.
    pub fn log_hyperprior(&self, params: &ParameterVector) -> Result<f64> {
        self.check(params)?;
        let mut grad = vec![0.0; params.values.len()];
        Ok(prior::accumulate_nuisance(&self.spec, &params.values, &mut grad))
    }

    pub fn log_posterior_with_gradient(&self, params: &ParameterVector) -> Result<LogDensityResult> {
        self.check(params)?;
        let mut gradient = vec![0.0; params.values.len()];
        let value = self.log_density_grad(&params.values, &mut gradient);
        Ok(LogDensityResult { value, gradient })
    }
}

impl LogDensity for Model {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let ll = likelihood::accumulate(&self.spec, &self.design, &self.y, position, grad);
        let lp = prior::accumulate(&self.spec, position, grad);
        let lh = prior::accumulate_nuisance(&self.spec, position, grad);
        ll + lp + lh
    }
}

/// Draws inclusion weights `λ = inv_logit(λ̃)` with `λ̃ ~ N(mu_lambda,
/// sigma_lambda²)` from the prior.
pub fn prior_inclusion_draws(hyper: &HyperParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    hyper.validate()?;
    let normal = Normal::new(hyper.mu_lambda, hyper.sigma_lambda)
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| inv_logit(normal.sample(&mut rng))).collect())
}
