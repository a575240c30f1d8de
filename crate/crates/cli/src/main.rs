//! `lncass`: batch front end for simulation, fitting, cross-validation,
//! screening, evaluation and prediction.

mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use config::{
    config_out, config_threads, require_out, resolve, CvArgs, CvConfig, DrawsFormat, EvaluateArgs, EvaluateConfig, FitArgs,
    FitConfig, PredictArgs, PredictConfig, ScreenArgs, ScreenConfig, SimulateArgs, SimulateConfig,
};
use lncass::dataprep::{load_covariates, load_csv, log1p_transform, save_csv, standardize, wald_screen, Dataset};
use lncass::metrics::{mae, recovery_auc};
use lncass::model::ModelSpec;
use lncass::pipeline::{cross_validate, fit, unit_grid, CvOptions, Fit};
use lncass::simgen::{generate, GroundTruth, SimCase};

const FAILURE_SENTINEL: &str = "FAILED";

#[derive(Parser)]
#[command(name = "lncass", version, about = "Sparse Bayesian regression with LN-CASS shrinkage priors")]
struct Cli {
    /// JSON file with option values; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for chains and folds (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a grouped simulation dataset with its ground truth.
    Simulate(SimulateArgs),
    /// Sample the posterior and write draws, summaries and diagnostics.
    Fit(FitArgs),
    /// Cross-validated predictions and AUCs for a binary response.
    Cv(CvArgs),
    /// Keep the columns with the largest univariate Wald statistics.
    Screen(ScreenArgs),
    /// Compare fitted coefficients with a simulation's ground truth.
    Evaluate(EvaluateArgs),
    /// Posterior-mean predictions from a previous fit.
    Predict(PredictArgs),
}

/// What `fit` records so that `predict` can rebuild the model.
#[derive(Serialize, Deserialize)]
struct FittedModel {
    spec: ModelSpec,
    column_names: Vec<String>,
    response: String,
    draws_file: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match output_dir(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let sentinel = out.join(FAILURE_SENTINEL);
    let result = std::fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .and_then(|_| {
            if sentinel.exists() {
                std::fs::remove_file(&sentinel)?;
            }
            run(&cli, &out)
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let _ = std::fs::write(&sentinel, format!("{e:#}\n"));
            ExitCode::FAILURE
        }
    }
}

/// The output directory is located before the remaining options are
/// validated, so that option errors still leave a sentinel behind.
fn output_dir(cli: &Cli) -> Result<PathBuf> {
    let flag = match &cli.command {
        Command::Simulate(a) => &a.out,
        Command::Fit(a) => &a.out,
        Command::Cv(a) => &a.out,
        Command::Screen(a) => &a.out,
        Command::Evaluate(a) => &a.out,
        Command::Predict(a) => &a.out,
    };
    match flag {
        Some(out) => Ok(out.clone()),
        None => require_out(&config_out(cli.config.as_deref())?),
    }
}

fn run(cli: &Cli, out: &Path) -> Result<()> {
    let c = cli.config.as_deref();
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => config_threads(c)?,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building thread pool")?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate(resolve(c, a)?, out),
        Command::Fit(a) => fit_cmd(resolve(c, a)?, out),
        Command::Cv(a) => cv(resolve(c, a)?, out),
        Command::Screen(a) => screen(resolve(c, a)?, out),
        Command::Evaluate(a) => evaluate(resolve(c, a)?, out),
        Command::Predict(a) => predict(resolve(c, a)?, out),
    })
}

fn simulate(cfg: SimulateConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let case = SimCase {
        case: cfg.case,
        noise_sd: cfg.noise_sd,
        seed: cfg.seed,
    };
    let (data, truth) = generate(&case)?;
    save_csv(&data, out.join("data.csv"))?;
    io::write_json(&out.join("truth.json"), &truth)?;
    // 1-based labels, ready for --groups
    let labels: Vec<usize> = truth.groups.iter().map(|g| g + 1).collect();
    io::write_json(&out.join("groups.json"), &labels)?;
    Ok(())
}

fn load(path: &Path, response: &str) -> Result<Dataset> {
    let data = load_csv(path, response).with_context(|| format!("loading {}", path.display()))?;
    if !data.is_complete() {
        bail!(
            "{} has {} missing covariate cells; impute before fitting",
            path.display(),
            data.missing_cells().len()
        );
    }
    Ok(data)
}

fn fit_cmd(cfg: FitConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let data = load(&cfg.model.data, &cfg.model.response)?;
    let options = cfg.model.options()?;
    let spec = options.spec_for(&data, &(0..data.p()).collect::<Vec<_>>())?;
    let fitted = fit(&spec, &data, &cfg.sampler.config())?;

    let draws_file = match cfg.draws_format {
        DrawsFormat::Csv => {
            io::write_draws_csv(&out.join("draws.csv"), &fitted.draws)?;
            "draws.csv"
        }
        DrawsFormat::Binary => {
            io::write_draws_binary(&out.join("draws.bin"), &fitted.draws)?;
            "draws.bin"
        }
    };
    let summary = fitted.summary(cfg.interval)?;
    io::write_summary_csv(&out.join("summary.csv"), &summary)?;

    let max_rhat = summary.params.iter().map(|p| p.rhat).fold(f64::NAN, f64::max);
    let min_ess = summary.params.iter().map(|p| p.ess).fold(f64::NAN, f64::min);
    let diagnostics = json!({
        "divergences": fitted.draws.total_divergences(),
        "warmup_divergences": fitted.draws.stats.iter().map(|s| s.warmup_divergences).sum::<usize>(),
        "max_rhat": max_rhat,
        "min_ess": min_ess,
        "generator": fitted.draws.generator,
        "chains": fitted.draws.stats,
    });
    io::write_json(&out.join("diagnostics.json"), &diagnostics)?;
    if fitted.draws.total_divergences() > 0 {
        eprintln!(
            "warning: {} divergent transitions after warmup",
            fitted.draws.total_divergences()
        );
    }

    if matches!(spec.prior, lncass::model::Prior::LncassGam { .. }) {
        let dir = out.join("curves");
        std::fs::create_dir_all(&dir)?;
        let curves = fitted.curves(&unit_grid(cfg.curve_points), cfg.interval)?;
        for c in curves {
            let name = sanitize(&data.column_names[c.covariate]);
            let mut w = io::csv_writer(&dir.join(format!("f_{}_{}.csv", c.covariate + 1, name)))?;
            w.write_record(["x", "mean", "median", "lower", "upper"])?;
            for j in 0..c.x.len() {
                w.write_record([c.x[j], c.mean[j], c.median[j], c.lower[j], c.upper[j]].map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
    }

    io::write_json(
        &out.join("model.json"),
        &FittedModel {
            spec,
            column_names: data.column_names.clone(),
            response: data.response_name.clone(),
            draws_file: draws_file.to_string(),
        },
    )?;
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cv(cfg: CvConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let data = load(&cfg.model.data, &cfg.model.response)?;
    let options = CvOptions {
        scheme: cfg.scheme(),
        preprocess: cfg.preprocess(),
        seed: cfg.sampler.seed,
    };
    let result = cross_validate(&data, &cfg.model.options()?, &cfg.sampler.config(), &options)?;

    let mut w = io::csv_writer(&out.join("predictions.csv"))?;
    w.write_record(["run", "fold", "row", "label", "prediction"])?;
    for p in &result.predictions {
        w.write_record([
            p.run.to_string(),
            p.fold.to_string(),
            p.index.to_string(),
            p.label.to_string(),
            p.prediction.to_string(),
        ])?;
    }
    w.flush()?;
    io::write_json(&out.join("folds.json"), &result.plans)?;
    io::write_json(
        &out.join("auc.json"),
        &json!({
            "run_aucs": result.run_aucs,
            "pooled_auc": result.pooled_auc,
            "divergences": result.divergences,
        }),
    )?;
    Ok(())
}

fn screen(cfg: ScreenConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let mut data = load(&cfg.data, &cfg.response)?;
    if cfg.log1p {
        data = log1p_transform(&data)?;
    }
    if cfg.standardize {
        data = standardize(&data)?;
    }
    let result = wald_screen(&data, cfg.top_k)?;
    save_csv(&result.data, out.join("screened.csv"))?;
    let mut rank = vec![None; data.p()];
    for (r, &c) in result.selected.iter().enumerate() {
        rank[c] = Some(r + 1);
    }
    let mut w = io::csv_writer(&out.join("z_scores.csv"))?;
    w.write_record(["column", "z", "coefficient", "score_fallback", "rank"])?;
    for (c, s) in result.stats.iter().enumerate() {
        w.write_record([
            data.column_names[c].clone(),
            s.z.to_string(),
            s.coefficient.to_string(),
            s.score_fallback.to_string(),
            rank[c].map_or(String::new(), |r| r.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn evaluate(cfg: EvaluateConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let (median, mean) = io::read_coefficients(&cfg.summary)?;
    let text = std::fs::read_to_string(&cfg.truth).with_context(|| format!("reading {}", cfg.truth.display()))?;
    let truth: GroundTruth = serde_json::from_str(&text).context("parsing ground truth")?;
    if median.len() != truth.beta.len() {
        bail!(
            "summary has {} coefficients but the truth has {}",
            median.len(),
            truth.beta.len()
        );
    }
    io::write_json(
        &out.join("evaluation.json"),
        &json!({
            "p": truth.beta.len(),
            "mae_median": mae(&median, &truth.beta)?,
            "mae_mean": mae(&mean, &truth.beta)?,
            "recovery_auc": recovery_auc(&median, &truth)?,
        }),
    )?;
    Ok(())
}

fn predict(cfg: PredictConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), &cfg)?;
    let model_path = cfg.fit.join("model.json");
    let text = std::fs::read_to_string(&model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model: FittedModel = serde_json::from_str(&text).context("parsing model.json")?;
    let draws_path = cfg.fit.join(&model.draws_file);
    let draws = if model.draws_file.ends_with(".bin") {
        io::read_draws_binary(&draws_path)?
    } else {
        io::read_draws_csv(&draws_path)?
    };
    let fitted = Fit::from_draws(model.spec, draws)?;
    let x = load_covariates(&cfg.data, &model.column_names)?;
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        bail!("{} has missing or non-finite covariate cells", cfg.data.display());
    }
    let pred = fitted.predict(&x)?;
    let mut w = io::csv_writer(&out.join("predictions.csv"))?;
    w.write_record(["row", "prediction"])?;
    for (i, p) in pred.iter().enumerate() {
        w.write_record([i.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
