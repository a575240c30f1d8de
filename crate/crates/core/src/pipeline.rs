//! Fit, predict and cross-validation workflows built from the other modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataprep::{
    binary_labels, kfold_stratified, loocv_balanced, wald_screen, Dataset, FoldPlan, Matrix, StandardizeParams,
    UnitScaleParams,
};
use crate::error::{Error, Result};
use crate::gam_basis::{reconstruct_f, KnotGrid};
use crate::math::inv_logit;
use crate::metrics::{auc, summarize, PosteriorSummary};
use crate::model::{HyperParams, Likelihood, ModelSpec, Prior};
use crate::sampler::{sample, PosteriorDraws, SamplerConfig};

/// Prior family chosen independently of the data dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorChoice {
    Lncass,
    /// Group label of every input column; labels need not be contiguous.
    LncassGrouped { groups: Vec<i64> },
    LncassGam { knots: usize },
    Horseshoe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub likelihood: Likelihood,
    pub prior: PriorChoice,
    pub hyper: HyperParams,
}

impl ModelOptions {
    /// Spec for `data` after keeping only the input columns `columns`
    /// (group labels are subset and renumbered accordingly).
    pub fn spec_for(&self, data: &Dataset, columns: &[usize]) -> Result<ModelSpec> {
        let prior = match &self.prior {
            PriorChoice::Lncass => Prior::LncassBasic,
            PriorChoice::LncassGrouped { groups } => {
                if let Some(&c) = columns.iter().find(|&&c| c >= groups.len()) {
                    return Err(Error::MissingGroup { index: c });
                }
                let labels: Vec<i64> = columns.iter().map(|&c| groups[c]).collect();
                Prior::LncassGrouped {
                    groups: crate::model::compact_groups(&labels),
                }
            }
            PriorChoice::LncassGam { knots } => Prior::LncassGam {
                knots: KnotGrid::equally_spaced(*knots)?,
            },
            PriorChoice::Horseshoe => Prior::Horseshoe,
        };
        let mut hyper = self.hyper.clone();
        if let Some(per) = &hyper.per_covariate {
            hyper.per_covariate = Some(columns.iter().map(|&c| per[c]).collect());
        }
        ModelSpec::new(self.likelihood, prior, hyper, data.p(), data.n())
    }
}

/// A fitted model: raw draws plus the derived coefficient draws.
#[derive(Debug, Clone)]
pub struct Fit {
    pub spec: ModelSpec,
    pub draws: PosteriorDraws,
    /// `beta[i]` draws; for the GAM prior `beta[k,i]` basis weights.
    pub coefficients: PosteriorDraws,
}

fn coefficient_names(spec: &ModelSpec) -> Vec<String> {
    match &spec.prior {
        Prior::LncassGam { knots } => (1..=spec.p)
            .flat_map(|i| (1..=knots.len()).map(move |k| format!("beta[{k},{i}]")))
            .collect(),
        _ => (1..=spec.p).map(|i| format!("beta[{i}]")).collect(),
    }
}

pub fn fit(spec: &ModelSpec, data: &Dataset, config: &SamplerConfig) -> Result<Fit> {
    let draws = sample(spec, data, config)?;
    Fit::from_draws(spec.clone(), draws)
}

impl Fit {
    pub fn from_draws(spec: ModelSpec, draws: PosteriorDraws) -> Result<Self> {
        if draws.names() != spec.parameter_names().as_slice() {
            return Err(Error::Format("draw columns do not match the model's parameters".into()));
        }
        let coefficients = draws.map_draws(coefficient_names(&spec), |v| spec.coefficients(v))?;
        Ok(Fit {
            spec,
            draws,
            coefficients,
        })
    }

    /// Summary of every sampled parameter followed by the coefficients.
    pub fn summary(&self, interval_mass: f64) -> Result<PosteriorSummary> {
        let mut s = summarize(&self.draws, interval_mass)?;
        s.params.extend(summarize(&self.coefficients, interval_mass)?.params);
        Ok(s)
    }

    /// Posterior-mean response on the raw scale: `P(y = 1)` for the
    /// logistic model, `E[y]` for the linear model.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; x.rows()];
        let mut count = 0usize;
        for v in self.draws.iter_draws() {
            let eta = self.spec.linear_predictor(v, x)?;
            for (a, e) in acc.iter_mut().zip(eta) {
                *a += match self.spec.likelihood {
                    Likelihood::BernoulliLogit => inv_logit(e),
                    Likelihood::GaussianLinear => e,
                };
            }
            count += 1;
        }
        Ok(acc.into_iter().map(|a| a / count as f64).collect())
    }

    /// Pointwise posterior summaries of each additive component `f_i` on
    /// `grid`. Only defined for the GAM prior.
    pub fn curves(&self, grid: &[f64], interval_mass: f64) -> Result<Vec<Curve>> {
        let Prior::LncassGam { knots } = &self.spec.prior else {
            return Err(Error::InvalidConfig("curves require the GAM prior".into()));
        };
        let m = knots.len();
        let tail = (1.0 - interval_mass) / 2.0;
        let total = self.coefficients.n_chains() * self.coefficients.n_draws();
        (0..self.spec.p)
            .map(|i| {
                let mut values = vec![Vec::with_capacity(total); grid.len()];
                for w in self.coefficients.iter_draws() {
                    let f = reconstruct_f(&w[i * m..(i + 1) * m], knots, grid)?;
                    for (col, v) in values.iter_mut().zip(f) {
                        col.push(v);
                    }
                }
                let mut curve = Curve {
                    covariate: i,
                    x: grid.to_vec(),
                    mean: Vec::with_capacity(grid.len()),
                    median: Vec::with_capacity(grid.len()),
                    lower: Vec::with_capacity(grid.len()),
                    upper: Vec::with_capacity(grid.len()),
                };
                for mut col in values {
                    curve.mean.push(col.iter().sum::<f64>() / col.len() as f64);
                    col.sort_by(f64::total_cmp);
                    curve.median.push(crate::metrics::quantile_sorted(&col, 0.5));
                    curve.lower.push(crate::metrics::quantile_sorted(&col, tail));
                    curve.upper.push(crate::metrics::quantile_sorted(&col, 1.0 - tail));
                }
                Ok(curve)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    /// 0-based covariate index.
    pub covariate: usize,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `count` equally spaced points covering `[0, 1]`.
pub fn unit_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|j| j as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CvScheme {
    /// `runs` independent stratified `k`-fold partitions.
    KFold { k: usize, runs: usize },
    /// One fold per observation with class-balanced training sets.
    BalancedLoocv,
}

/// Preprocessing recomputed from the training rows of every fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPreprocess {
    pub standardize: bool,
    /// Keep this many columns by Wald screening.
    pub screen: Option<usize>,
    /// Screen once on the full data instead of inside each fold. This
    /// leaks held-out labels into feature selection and gives optimistic
    /// AUCs; it exists only for comparison.
    pub global_screening: bool,
    /// Rescale to `[0, 1]` with training min/range; test rows are clamped.
    pub unit_scale: bool,
}

impl Default for FoldPreprocess {
    fn default() -> Self {
        FoldPreprocess {
            standardize: false,
            screen: None,
            global_screening: false,
            unit_scale: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub scheme: CvScheme,
    pub preprocess: FoldPreprocess,
    /// Seeds the fold plans and each fold's sampler.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvPrediction {
    pub run: usize,
    pub fold: usize,
    /// Row of the input dataset.
    pub index: usize,
    pub label: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub plans: Vec<FoldPlan>,
    /// Ordered by run, fold, then row.
    pub predictions: Vec<CvPrediction>,
    pub run_aucs: Vec<f64>,
    /// AUC over all held-out predictions of all runs.
    pub pooled_auc: f64,
    pub divergences: usize,
}

fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random()
}

/// Training-fold preprocessing applied to both the training and test rows.
/// Returns the transformed pair and the retained input columns.
pub fn preprocess_fold(
    train: &Dataset,
    test: &Dataset,
    pre: &FoldPreprocess,
) -> Result<(Dataset, Dataset, Vec<usize>)> {
    let (mut train, mut test) = (train.clone(), test.clone());
    let mut columns: Vec<usize> = (0..train.p()).collect();
    if pre.standardize {
        let params = StandardizeParams::fit(&train.x, &train.column_names)?;
        train.x = params.apply(&train.x);
        test.x = params.apply(&test.x);
    }
    if let Some(k) = pre.screen.filter(|_| !pre.global_screening) {
        let screened = wald_screen(&train, k.min(train.p()))?;
        columns = screened.selected.clone();
        train = screened.data;
        test = test.select_cols(&columns);
    }
    if pre.unit_scale {
        let params = UnitScaleParams::fit(&train.x, &train.column_names)?;
        train.x = params.apply(&train.x);
        test.x = params.apply(&test.x);
    }
    Ok((train, test, columns))
}

/// Cross-validated posterior-mean predictions. Folds run in parallel; each
/// fold's sampler seed is derived from `(seed, run, fold)` so results do not
/// depend on scheduling.
pub fn cross_validate(
    data: &Dataset,
    model: &ModelOptions,
    sampler: &SamplerConfig,
    options: &CvOptions,
) -> Result<CvResult> {
    let labels = binary_labels(&data.y)?;
    let (data, base_columns) = match options.preprocess.screen.filter(|_| options.preprocess.global_screening) {
        Some(k) => {
            let s = wald_screen(data, k.min(data.p()))?;
            (s.data, s.selected)
        }
        None => (data.clone(), (0..data.p()).collect()),
    };

    let plans: Vec<FoldPlan> = match options.scheme {
        CvScheme::KFold { k, runs } => {
            if runs == 0 {
                return Err(Error::InvalidConfig("runs must be at least 1".into()));
            }
            (0..runs)
                .map(|r| kfold_stratified(&labels, k, stream_seed(options.seed, r as u64)))
                .collect::<Result<_>>()?
        }
        CvScheme::BalancedLoocv => vec![loocv_balanced(&labels, stream_seed(options.seed, 0))?],
    };

    let jobs: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(r, p)| (0..p.folds.len()).map(move |f| (r, f)))
        .collect();
    let outcomes: Vec<Result<(Vec<CvPrediction>, usize)>> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let fold = &plans[r].folds[f];
            let (train, test, cols) =
                preprocess_fold(&data.select_rows(&fold.train), &data.select_rows(&fold.test), &options.preprocess)?;
            let input_cols: Vec<usize> = cols.iter().map(|&c| base_columns[c]).collect();
            let spec = model.spec_for(&train, &input_cols)?;
            let mut cfg = sampler.clone();
            cfg.seed = stream_seed(options.seed, (1 << 32) | ((r as u64) << 20) | f as u64);
            let fitted = fit(&spec, &train, &cfg)?;
            let pred = fitted.predict(&test.x)?;
            let rows = fold
                .test
                .iter()
                .zip(pred)
                .map(|(&i, prediction)| CvPrediction {
                    run: r,
                    fold: f,
                    index: i,
                    label: data.y[i],
                    prediction,
                })
                .collect();
            Ok((rows, fitted.draws.total_divergences()))
        })
        .collect();

    let mut predictions = Vec::with_capacity(data.n() * plans.len());
    let mut divergences = 0;
    for o in outcomes {
        let (rows, d) = o?;
        predictions.extend(rows);
        divergences += d;
    }
    let score = |rows: &[&CvPrediction]| -> Result<f64> {
        let s: Vec<f64> = rows.iter().map(|p| p.prediction).collect();
        let l: Vec<bool> = rows.iter().map(|p| p.label == 1.0).collect();
        auc(&s, &l)
    };
    let run_aucs = (0..plans.len())
        .map(|r| score(&predictions.iter().filter(|p| p.run == r).collect::<Vec<_>>()))
        .collect::<Result<Vec<f64>>>()?;
    let pooled_auc = score(&predictions.iter().collect::<Vec<_>>())?;
    Ok(CvResult {
        plans,
        predictions,
        run_aucs,
        pooled_auc,
        divergences,
    })
}
