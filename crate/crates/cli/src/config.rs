//! Command options: clap flags layered over an optional JSON config file.
//!
//! Every flag is optional on the command line. A config file supplies values
//! under the same (kebab-case) names and flags override it. The resolved
//! options are echoed to `config.json` in the output directory, without the
//! output path and thread count so that reruns elsewhere compare equal.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use lncass::model::{HyperParams, Likelihood, Parameterization};
use lncass::pipeline::{CvScheme, FoldPreprocess, ModelOptions, PriorChoice};
use lncass::sampler::SamplerConfig;
use lncass::simgen::Case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Lncass,
    LncassGrouped,
    LncassGam,
    Horseshoe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DrawsFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Kfold,
    Loocv,
}

fn parse_case(s: &str) -> std::result::Result<Case, String> {
    s.parse().map_err(|e: lncass::Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Simulation setting: p20, p70 or p120.
    #[arg(long, value_parser = parse_case)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateConfig {
    #[serde(default = "default_case")]
    pub case: Case,
    #[serde(default = "one")]
    pub noise_sd: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorKind>,
    /// Group label per covariate: an inline JSON array or a path to one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<String>,
    /// Number of GAM basis functions per covariate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SamplerArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_accept: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tree_depth: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sampling coordinates for the coefficients.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameterization: Option<ParamKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Centered,
    NonCentered,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelConfig {
    pub data: PathBuf,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default = "default_prior")]
    pub prior: PriorKind,
    #[serde(default)]
    pub groups: Option<String>,
    #[serde(default = "default_knots")]
    pub knots: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub mu_lambda: f64,
    #[serde(default = "default_sigma_lambda")]
    pub sigma_lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SamplerFlags {
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_iters")]
    pub warmup: usize,
    #[serde(default = "default_iters")]
    pub draws: usize,
    #[serde(default = "default_target_accept")]
    pub target_accept: f64,
    #[serde(default = "default_depth")]
    pub max_tree_depth: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_param")]
    pub parameterization: ParamKind,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Central posterior interval mass for summaries.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws_format: Option<DrawsFormat>,
    /// Grid points per GAM curve.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FitConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(flatten)]
    pub sampler: SamplerFlags,
    #[serde(default = "default_interval")]
    pub interval: f64,
    #[serde(default = "default_draws_format")]
    pub draws_format: DrawsFormat,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeKind>,
    /// Folds per run (k-fold scheme).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    /// Independent k-fold partitions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// Standardize covariates with training-fold statistics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
    /// Keep this many covariates by Wald screening inside each fold.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen: Option<usize>,
    /// Screen once on all rows before splitting (optimistic; for comparison only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_screening: Option<bool>,
    /// Rescale covariates to [0, 1] with training-fold statistics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_scale: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CvConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(flatten)]
    pub sampler: SamplerFlags,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub screen: Option<usize>,
    #[serde(default)]
    pub global_screening: bool,
    #[serde(default)]
    pub unit_scale: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScreenArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Number of columns to keep.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    /// Apply log(1 + x) before screening.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log1p: Option<bool>,
    /// Standardize columns before screening.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScreenConfig {
    pub data: PathBuf,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub log1p: bool,
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    /// summary.csv written by `fit`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// truth.json written by `simulate`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateConfig {
    pub summary: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PredictArgs {
    /// Output directory of a previous `fit`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PathBuf>,
    /// CSV containing (at least) the fitted covariate columns.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PredictConfig {
    pub fit: PathBuf,
    pub data: PathBuf,
}

fn default_case() -> Case {
    Case::P20
}
fn one() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    42
}
fn default_response() -> String {
    "y".into()
}
fn default_model() -> ModelKind {
    ModelKind::Linear
}
fn default_prior() -> PriorKind {
    PriorKind::Lncass
}
fn default_knots() -> usize {
    5
}
fn default_tau() -> f64 {
    HyperParams::default().tau
}
fn default_sigma_lambda() -> f64 {
    HyperParams::default().sigma_lambda
}
fn default_chains() -> usize {
    SamplerConfig::default().chains
}
fn default_iters() -> usize {
    SamplerConfig::default().draws
}
fn default_target_accept() -> f64 {
    SamplerConfig::default().target_accept
}
fn default_depth() -> usize {
    SamplerConfig::default().max_tree_depth
}
fn default_param() -> ParamKind {
    ParamKind::NonCentered
}
fn default_interval() -> f64 {
    0.9
}
fn default_draws_format() -> DrawsFormat {
    DrawsFormat::Csv
}
fn default_curve_points() -> usize {
    101
}
fn default_scheme() -> SchemeKind {
    SchemeKind::Kfold
}
fn default_folds() -> usize {
    10
}
fn default_runs() -> usize {
    1
}
fn default_top_k() -> usize {
    500
}

/// Keys accepted in a config file besides the resolved options; `out`
/// is read separately by [`config_out`].
const EXTRA_KEYS: [&str; 2] = ["out", "threads"];

/// Merges `flags` over the config file and deserializes the result.
/// Unknown config keys are rejected.
pub fn resolve<A: Serialize, R: Serialize + DeserializeOwned>(config: Option<&Path>, flags: &A) -> Result<R> {
    let mut merged = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str::<Value>(&text).with_context(|| format!("parsing {}", path.display()))? {
                Value::Object(m) => m,
                _ => bail!("{} must contain a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    merged.remove("threads");
    let Value::Object(over) = serde_json::to_value(flags)? else {
        unreachable!("flag structs serialize to objects")
    };
    merged.extend(over);
    let resolved: R = serde_json::from_value(Value::Object(merged.clone())).context("resolving options")?;
    let known: BTreeSet<String> = match serde_json::to_value(&resolved)? {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => BTreeSet::new(),
    };
    let unknown: Vec<&String> = merged
        .keys()
        .filter(|k| !known.contains(*k) && !EXTRA_KEYS.contains(&k.as_str()))
        .collect();
    if !unknown.is_empty() {
        bail!("unknown option(s) in config: {unknown:?}");
    }
    Ok(resolved)
}

/// Thread count from the config file, for when `--threads` is not given.
pub fn config_threads(config: Option<&Path>) -> Result<Option<usize>> {
    let Some(path) = config else { return Ok(None) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(v.get("threads").and_then(Value::as_u64).map(|t| t as usize))
}

/// `out` from the config file, if present.
pub fn config_out(config: Option<&Path>) -> Result<Option<PathBuf>> {
    let Some(path) = config else { return Ok(None) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(v.get("out").and_then(Value::as_str).map(PathBuf::from))
}

pub fn require_out(out: &Option<PathBuf>) -> Result<PathBuf> {
    out.clone().context("an output directory is required (--out)")
}

/// Group labels from an inline JSON array or a file holding one.
pub fn parse_groups(spec: &str) -> Result<Vec<i64>> {
    let text = if spec.trim_start().starts_with('[') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).with_context(|| format!("reading groups file {spec}"))?
    };
    serde_json::from_str(&text).context("groups must be a JSON array of integers")
}

impl ModelConfig {
    pub fn options(&self) -> Result<ModelOptions> {
        let likelihood = match self.model {
            ModelKind::Linear => Likelihood::GaussianLinear,
            ModelKind::Logistic => Likelihood::BernoulliLogit,
        };
        let prior = match self.prior {
            PriorKind::Lncass => PriorChoice::Lncass,
            PriorKind::LncassGrouped => {
                let spec = self
                    .groups
                    .as_deref()
                    .context("--groups is required for the grouped prior")?;
                PriorChoice::LncassGrouped {
                    groups: parse_groups(spec)?,
                }
            }
            PriorKind::LncassGam => PriorChoice::LncassGam { knots: self.knots },
            PriorKind::Horseshoe => PriorChoice::Horseshoe,
        };
        let hyper = HyperParams {
            tau: self.tau,
            mu_lambda: self.mu_lambda,
            sigma_lambda: self.sigma_lambda,
            ..HyperParams::default()
        };
        hyper.validate()?;
        Ok(ModelOptions {
            likelihood,
            prior,
            hyper,
        })
    }
}

impl SamplerFlags {
    pub fn config(&self) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            warmup: self.warmup,
            draws: self.draws,
            target_accept: self.target_accept,
            max_tree_depth: self.max_tree_depth,
            seed: self.seed,
            parameterization: match self.parameterization {
                ParamKind::Centered => Parameterization::Centered,
                ParamKind::NonCentered => Parameterization::NonCentered,
            },
        }
    }
}

impl CvConfig {
    pub fn scheme(&self) -> CvScheme {
        match self.scheme {
            SchemeKind::Kfold => CvScheme::KFold {
                k: self.folds,
                runs: self.runs,
            },
            SchemeKind::Loocv => CvScheme::BalancedLoocv,
        }
    }

    pub fn preprocess(&self) -> FoldPreprocess {
        FoldPreprocess {
            standardize: self.standardize,
            screen: self.screen,
            global_screening: self.global_screening,
            unit_scale: self.unit_scale,
        }
    }
}
