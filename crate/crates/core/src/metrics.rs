//! ROC/AUC, mean absolute error, posterior summaries and hard selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{ess_chains, split_rhat, PosteriorDraws};
use crate::simgen::GroundTruth;

fn class_counts(labels: &[bool]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks of the positives (1-based ranks).
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Decreasing; the first entry is `+∞` for the `(0, 0)` corner.
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.fpr
            .windows(2)
            .zip(self.tpr.windows(2))
            .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
            .sum()
    }
}

/// ROC curve with one point per distinct score: a case is called positive
/// when its score is at least the threshold.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut curve = RocCurve {
        thresholds: vec![f64::INFINITY],
        fpr: vec![0.0],
        tpr: vec![0.0],
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.thresholds.push(t);
        curve.fpr.push(fp as f64 / neg as f64);
        curve.tpr.push(tp as f64 / pos as f64);
    }
    Ok(curve)
}

/// `(1/p) Σ |estimate_i - truth_i|`.
pub fn mae(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "estimate vs truth",
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>() / truth.len() as f64)
}

/// AUC of `|estimate|` against the truth's nonzero indicators: how well the
/// estimates order truly active covariates above inactive ones.
pub fn recovery_auc(estimates: &[f64], truth: &GroundTruth) -> Result<f64> {
    let scores: Vec<f64> = estimates.iter().map(|e| e.abs()).collect();
    auc(&scores, &truth.nonzero_mask)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub rhat: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub interval_mass: f64,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Medians of `beta[1..]`, in covariate order.
    pub fn coefficient_medians(&self) -> Vec<f64> {
        let mut out = Vec::new();
        while let Some(p) = self.get(&format!("beta[{}]", out.len() + 1)) {
            out.push(p.median);
        }
        out
    }
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (position `q (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Pooled-chain summaries for every parameter. R̂ is `NaN` when fewer than
/// two chains are available.
pub fn summarize(draws: &PosteriorDraws, interval_mass: f64) -> Result<PosteriorSummary> {
    if !(interval_mass > 0.0 && interval_mass < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "interval mass must lie in (0, 1), got {interval_mass}"
        )));
    }
    if draws.n_draws() == 0 {
        return Err(Error::TooFewDraws {
            chains: draws.n_chains(),
            draws: 0,
        });
    }
    let tail = (1.0 - interval_mass) / 2.0;
    let params = (0..draws.dim())
        .map(|j| {
            let chains = draws.param_chains(j);
            let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
            let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
            pooled.sort_by(f64::total_cmp);
            ParamSummary {
                name: draws.names()[j].clone(),
                mean,
                median: quantile_sorted(&pooled, 0.5),
                lower: quantile_sorted(&pooled, tail),
                upper: quantile_sorted(&pooled, 1.0 - tail),
                rhat: split_rhat(&chains).unwrap_or(f64::NAN),
                ess: ess_chains(&chains).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(PosteriorSummary {
        interval_mass,
        params,
    })
}

/// Indices of the `k` largest `|value|`, largest first; ties go to the
/// lower index.
pub fn top_k_abs(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > values.len() {
        return Err(Error::TooMany {
            what: "selected coefficients",
            requested: k,
            available: values.len(),
        });
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

/// Hard selection by thresholding `|median β_i|`: the 0-based covariates of
/// the `k` largest.
pub fn hard_select(summary: &PosteriorSummary, k: usize) -> Result<Vec<usize>> {
    top_k_abs(&summary.coefficient_medians(), k)
}
