//! Simulation-study data: Latin hypercube designs, grouped ground-truth
//! coefficients and Gaussian-noise linear responses (n = 100).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataprep::{Dataset, Matrix};
use crate::error::{Error, Result};

pub const N_OBSERVATIONS: usize = 100;
pub const GROUP_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    P20,
    P70,
    P120,
}

impl Case {
    pub fn p(self) -> usize {
        match self {
            Case::P20 => 20,
            Case::P70 => 70,
            Case::P120 => 120,
        }
    }

    pub fn n_groups(self) -> usize {
        self.p() / GROUP_SIZE
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p20" | "20" => Ok(Case::P20),
            "p70" | "70" => Ok(Case::P70),
            "p120" | "120" => Ok(Case::P120),
            other => Err(Error::Format(format!("unknown simulation case {other:?}; expected p20, p70 or p120"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCase {
    pub case: Case,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimCase {
    pub fn new(case: Case, seed: u64) -> Self {
        SimCase {
            case,
            noise_sd: 1.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta: Vec<f64>,
    /// 0-based group of each covariate.
    pub groups: Vec<usize>,
    pub nonzero_mask: Vec<bool>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n × p` Latin hypercube on `[0, 1)`: each column has exactly one point in
/// each of the `n` equal-width strata, in an independently shuffled order.
pub fn latin_hypercube(n: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::zeros(n, p);
    let mut strata: Vec<usize> = (0..n).collect();
    for c in 0..p {
        strata.shuffle(&mut rng);
        for (r, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            // guard against rounding up to the next stratum edge
            let v = ((s as f64 + u) / n as f64).min(((s + 1) as f64 / n as f64).next_down());
            m.set(r, c, v);
        }
    }
    m
}

enum Block {
    Zero,
    Constant(f64),
    Noisy(f64),
    Fixed([f64; GROUP_SIZE]),
}

/// Ground-truth coefficients for the three grouped simulation settings.
/// Groups not listed explicitly are zero groups.
pub fn truth_coefficients(case: &SimCase) -> GroundTruth {
    // 1-based group numbers
    let named: Vec<(usize, Block)> = match case.case {
        Case::P20 => vec![(2, Block::Constant(2.0)), (4, Block::Noisy(-1.0))],
        Case::P70 => vec![
            (4, Block::Constant(2.0)),
            (7, Block::Constant(2.0)),
            (8, Block::Noisy(-1.0)),
            (14, Block::Fixed([-0.5, -0.5, 3.0, -0.5, -0.5])),
        ],
        Case::P120 => vec![
            (6, Block::Constant(1.0)),
            (12, Block::Noisy(2.0)),
            (18, Block::Fixed([-1.0, -1.0, -1.0, -2.0, -1.0])),
            (19, Block::Fixed([0.5, 0.5, 0.5, 2.0, 0.5])),
        ],
    };
    let p = case.case.p();
    let mut rng = rng_for(case.seed, 1);
    let jitter = Normal::new(0.0, 0.1).expect("valid normal");
    let mut beta = vec![0.0; p];
    for g in 1..=case.case.n_groups() {
        let block = named
            .iter()
            .find(|(k, _)| *k == g)
            .map_or(&Block::Zero, |(_, b)| b);
        let slot = &mut beta[(g - 1) * GROUP_SIZE..g * GROUP_SIZE];
        match block {
            Block::Zero => {}
            Block::Constant(v) => slot.fill(*v),
            Block::Noisy(v) => slot.iter_mut().for_each(|b| *b = v + jitter.sample(&mut rng)),
            Block::Fixed(vals) => slot.copy_from_slice(vals),
        }
    }
    GroundTruth {
        nonzero_mask: beta.iter().map(|&b| b != 0.0).collect(),
        groups: (0..p).map(|i| i / GROUP_SIZE).collect(),
        beta,
    }
}

/// `y = X β + ε` with zero intercept and `ε ~ N(0, noise_sd²)`.
pub fn simulate_regression(x: &Matrix, truth: &GroundTruth, noise_sd: f64, seed: u64) -> Result<Vec<f64>> {
    if x.cols() != truth.beta.len() {
        return Err(Error::DimensionMismatch {
            what: "truth coefficients",
            expected: x.cols(),
            got: truth.beta.len(),
        });
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidHyperParameter {
            name: "noise_sd",
            value: noise_sd,
            reason: "must be non-negative and finite",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    Ok((0..x.rows())
        .map(|r| {
            let mean: f64 = x.row(r).iter().zip(&truth.beta).map(|(a, b)| a * b).sum();
            mean + noise_sd * normal.sample(&mut rng)
        })
        .collect())
}

/// Full simulated dataset for a case. Design, coefficient jitter and noise
/// come from separate streams of the case seed.
pub fn generate(case: &SimCase) -> Result<(Dataset, GroundTruth)> {
    let p = case.case.p();
    let design_seed = rng_for(case.seed, 0).random();
    let noise_seed = rng_for(case.seed, 2).random();
    let x = latin_hypercube(N_OBSERVATIONS, p, design_seed);
    let truth = truth_coefficients(case);
    let y = simulate_regression(&x, &truth, case.noise_sd, noise_seed)?;
    Ok((Dataset::unnamed(x, y)?, truth))
}
