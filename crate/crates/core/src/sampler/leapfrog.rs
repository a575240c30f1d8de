use crate::model::LogDensity;

/// Diagonal Euclidean metric. `inv_mass` is `M⁻¹`, which after adaptation
/// holds the estimated posterior variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub inv_mass: Vec<f64>,
}

impl Metric {
    pub fn unit(dim: usize) -> Self {
        Metric {
            inv_mass: vec![1.0; dim],
        }
    }

    pub fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(&self.inv_mass).map(|(pi, m)| pi * pi * m).sum::<f64>()
    }

    /// `M⁻¹ p`.
    pub fn velocity(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_mass).map(|(pi, m)| pi * m).collect()
    }
}

/// Phase-space point with cached log density and gradient.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>, p: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = target.log_density_grad(&q, &mut grad);
        Point { q, p, grad, logp }
    }

    pub fn hamiltonian(&self, metric: &Metric) -> f64 {
        -self.logp + metric.kinetic(&self.p)
    }

    /// One kick-drift-kick step. Returns `false` if the new log density or
    /// gradient is not finite.
    pub fn step<T: LogDensity + ?Sized>(&mut self, target: &T, eps: f64, metric: &Metric) -> bool {
        let half = 0.5 * eps;
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
        for ((q, p), m) in self.q.iter_mut().zip(&self.p).zip(&metric.inv_mass) {
            *q += eps * m * p;
        }
        self.logp = target.log_density_grad(&self.q, &mut self.grad);
        if !self.logp.is_finite() || self.grad.iter().any(|g| !g.is_finite()) {
            return false;
        }
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogResult {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    /// Set when a non-finite density or gradient was hit; the returned state
    /// is the last finite one.
    pub divergent: bool,
}

/// Runs `steps` leapfrog updates of `H(q, p) = -log π(q) + ½ pᵀ M⁻¹ p` with
/// diagonal mass matrix `mass_diag`. A negative `stepsize` integrates
/// backwards in time.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    position: &[f64],
    momentum: &[f64],
    stepsize: f64,
    steps: usize,
    mass_diag: &[f64],
) -> LeapfrogResult {
    let metric = Metric {
        inv_mass: mass_diag.iter().map(|m| 1.0 / m).collect(),
    };
    let mut pt = Point::new(target, position.to_vec(), momentum.to_vec());
    let mut divergent = !pt.logp.is_finite();
    if !divergent {
        for _ in 0..steps {
            let prev = pt.clone();
            if !pt.step(target, stepsize, &metric) {
                pt = prev;
                divergent = true;
                break;
            }
        }
    }
    LeapfrogResult {
        position: pt.q,
        momentum: pt.p,
        divergent,
    }
}
