//! One No-U-Turn transition with multinomial sampling over the trajectory.

use rand::Rng;
use rand_distr::StandardNormal;

use super::leapfrog::{Metric, Point};
use crate::math::log_sum_exp;
use crate::model::LogDensity;

/// Energy error above which a transition is marked divergent.
pub(crate) const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TransitionStats {
    pub accept_stat: f64,
    pub divergent: bool,
    pub depth: usize,
    pub n_leapfrog: usize,
}

struct Subtree {
    /// Edge adjacent to the tree being extended.
    first: Point,
    /// Far edge in the direction of travel.
    last: Point,
    proposal: Point,
    log_sum_weight: f64,
    rho: Vec<f64>,
}

struct Builder<'a, T: ?Sized, R> {
    target: &'a T,
    metric: &'a Metric,
    eps: f64,
    h0: f64,
    rng: &'a mut R,
    sum_accept: f64,
    n_leapfrog: usize,
    divergent: bool,
}

fn no_u_turn(metric: &Metric, a: &Point, b: &Point, rho: &[f64]) -> bool {
    let dot = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&metric.inv_mass)
            .zip(rho)
            .map(|((pi, m), r)| pi * m * r)
            .sum()
    };
    dot(&a.p) > 0.0 && dot(&b.p) > 0.0
}

/// Criterion across two adjacent subtrees `a` then `b` (in travel order):
/// the merged span plus the two spans straddling the junction.
fn merged_ok(metric: &Metric, a: &Subtree, b: &Subtree, rho: &[f64]) -> bool {
    if !no_u_turn(metric, &a.first, &b.last, rho) {
        return false;
    }
    let rho_left: Vec<f64> = a.rho.iter().zip(&b.first.p).map(|(x, y)| x + y).collect();
    if !no_u_turn(metric, &a.first, &b.first, &rho_left) {
        return false;
    }
    let rho_right: Vec<f64> = b.rho.iter().zip(&a.last.p).map(|(x, y)| x + y).collect();
    no_u_turn(metric, &a.last, &b.last, &rho_right)
}

impl<T: LogDensity + ?Sized, R: Rng> Builder<'_, T, R> {
    /// Builds a subtree of `2^depth` states starting next to `from`.
    /// `None` means the subtree diverged or made a U-turn internally.
    fn build(&mut self, from: &Point, depth: usize, forward: bool) -> Option<Subtree> {
        if depth == 0 {
            let mut pt = from.clone();
            let eps = if forward { self.eps } else { -self.eps };
            let ok = pt.step(self.target, eps, self.metric);
            self.n_leapfrog += 1;
            let h = pt.hamiltonian(self.metric);
            if !ok || !h.is_finite() || h - self.h0 > DIVERGENCE_THRESHOLD {
                self.divergent = true;
                return None;
            }
            let log_w = self.h0 - h;
            self.sum_accept += log_w.exp().min(1.0);
            return Some(Subtree {
                first: pt.clone(),
                last: pt.clone(),
                rho: pt.p.clone(),
                proposal: pt,
                log_sum_weight: log_w,
            });
        }
        let inner = self.build(from, depth - 1, forward)?;
        let outer = self.build(&inner.last, depth - 1, forward)?;
        let log_sum_weight = log_sum_exp(inner.log_sum_weight, outer.log_sum_weight);
        let rho: Vec<f64> = inner.rho.iter().zip(&outer.rho).map(|(a, b)| a + b).collect();
        if !merged_ok(self.metric, &inner, &outer, &rho) {
            return None;
        }
        let take_outer = self.rng.random::<f64>() < (outer.log_sum_weight - log_sum_weight).exp();
        let proposal = if take_outer { outer.proposal } else { inner.proposal };
        Some(Subtree {
            first: inner.first,
            last: outer.last,
            proposal,
            log_sum_weight,
            rho,
        })
    }
}

/// Draws a momentum, grows a trajectory by repeated doubling until a U-turn,
/// divergence or `max_depth`, and returns the multinomially selected state.
pub(crate) fn transition<T: LogDensity + ?Sized, R: Rng>(
    target: &T,
    current: &Point,
    eps: f64,
    metric: &Metric,
    max_depth: usize,
    rng: &mut R,
) -> (Point, TransitionStats) {
    let mut start = current.clone();
    for (p, m) in start.p.iter_mut().zip(&metric.inv_mass) {
        let z: f64 = rng.sample(StandardNormal);
        *p = z / m.sqrt();
    }
    let h0 = start.hamiltonian(metric);

    let mut tree = Subtree {
        first: start.clone(),
        last: start.clone(),
        rho: start.p.clone(),
        proposal: start,
        log_sum_weight: 0.0,
    };
    // `tree.first` is the backward (earliest) edge, `tree.last` the forward edge.
    let mut builder = Builder {
        target,
        metric,
        eps,
        h0,
        rng,
        sum_accept: 0.0,
        n_leapfrog: 0,
        divergent: false,
    };
    let mut depth = 0;
    while depth < max_depth {
        let forward = builder.rng.random::<bool>();
        let edge = if forward { &tree.last } else { &tree.first };
        let Some(sub) = builder.build(&edge.clone(), depth, forward) else {
            depth += 1;
            break;
        };
        depth += 1;

        if builder.rng.random::<f64>() < (sub.log_sum_weight - tree.log_sum_weight).exp() {
            tree.proposal = sub.proposal.clone();
        }
        tree.log_sum_weight = log_sum_exp(tree.log_sum_weight, sub.log_sum_weight);
        let rho: Vec<f64> = tree.rho.iter().zip(&sub.rho).map(|(a, b)| a + b).collect();

        // Arrange old tree and new subtree in travel order for the checks.
        let ok = if forward {
            merged_ok(metric, &tree, &sub, &rho)
        } else {
            let old = Subtree {
                first: tree.last.clone(),
                last: tree.first.clone(),
                proposal: tree.proposal.clone(),
                log_sum_weight: 0.0,
                rho: tree.rho.clone(),
            };
            merged_ok(metric, &old, &sub, &rho)
        };
        if forward {
            tree.last = sub.last;
        } else {
            tree.first = sub.last;
        }
        tree.rho = rho;
        if !ok {
            break;
        }
    }

    let stats = TransitionStats {
        accept_stat: if builder.n_leapfrog > 0 {
            builder.sum_accept / builder.n_leapfrog as f64
        } else {
            0.0
        },
        divergent: builder.divergent,
        depth,
        n_leapfrog: builder.n_leapfrog,
    };
    (tree.proposal, stats)
}
