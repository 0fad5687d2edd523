use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::cost::{ik_cost, penalty_cost, residuals};
use crate::error::{Error, Result};
use crate::kinematics::{Observation, ParamVector, Skeleton};

/// Local optimizer used by [`solve_local`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalMethod {
    GradientDescent,
    TrustRegion,
}

impl std::str::FromStr for LocalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" | "gradient-descent" => Ok(Self::GradientDescent),
            "tr" | "trust-region" => Ok(Self::TrustRegion),
            other => Err(Error::Config(format!("unknown local method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub method: LocalMethod,
    pub max_iterations: usize,
    /// Wall-clock budget in seconds.
    pub time_budget: f64,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            method: LocalMethod::TrustRegion,
            max_iterations: 2000,
            time_budget: 30.0,
            gradient_tolerance: 1e-9,
            step_tolerance: 1e-12,
        }
    }
}

impl PenaltyConfig {
    pub fn with_method(mut self, method: LocalMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.max_iterations == 0 || !(self.time_budget > 0.0) {
            return Err(Error::Config("iteration and time budgets must be positive".into()));
        }
        if !(self.gradient_tolerance >= 0.0 && self.step_tolerance >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub theta: ParamVector,
    pub penalty_cost: f64,
    pub ik_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

/// Minimizes the penalized IK objective from `start`.
///
/// Accepted iterates never increase the penalty cost, and the best iterate is
/// returned when a budget runs out.
pub fn solve_local(
    skeleton: &Skeleton,
    obs: &Observation,
    start: &ParamVector,
    cfg: &PenaltyConfig,
) -> Result<LocalResult> {
    cfg.validate()?;
    start.check_dim(skeleton)?;
    obs.validate(skeleton)?;
    let clock = Instant::now();
    let deadline = clock + Duration::from_secs_f64(cfg.time_budget.min(1e9));
    let problem = Problem { skeleton, obs, lambda: cfg.lambda };
    let (z, iterations, converged) = match cfg.method {
        LocalMethod::GradientDescent => gradient_descent(&problem, start.to_dvector(), cfg, deadline)?,
        LocalMethod::TrustRegion => trust_region(&problem, start.to_dvector(), cfg, deadline)?,
    };
    let theta = ParamVector::from_flat(z.as_slice())?;
    Ok(LocalResult {
        penalty_cost: penalty_cost(skeleton, obs, &theta, cfg.lambda)?,
        ik_cost: ik_cost(skeleton, obs, &theta)?,
        theta,
        iterations,
        converged,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

struct Problem<'a> {
    skeleton: &'a Skeleton,
    obs: &'a Observation,
    lambda: f64,
}

impl Problem<'_> {
    fn params(z: &DVector<f64>) -> ParamVector {
        ParamVector::from_flat(z.as_slice()).expect("parameter vector has at least a translation")
    }

    fn cost(&self, z: &DVector<f64>) -> Result<f64> {
        penalty_cost(self.skeleton, self.obs, &Self::params(z), self.lambda)
    }

    fn linearize(&self, z: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        residuals(self.skeleton, self.obs, &Self::params(z), self.lambda)
    }
}

fn step_small(step: f64, z: &DVector<f64>, tol: f64) -> bool {
    step <= tol * (z.norm() + tol)
}

fn gradient_descent(
    problem: &Problem,
    mut z: DVector<f64>,
    cfg: &PenaltyConfig,
    deadline: Instant,
) -> Result<(DVector<f64>, usize, bool)> {
    const ARMIJO: f64 = 1e-4;
    let mut f = problem.cost(&z)?;
    let mut alpha: f64 = 1.0;
    for iter in 0..cfg.max_iterations {
        let (r, jac) = problem.linearize(&z)?;
        let g = jac.transpose() * r * 2.0;
        let gnorm2 = g.norm_squared();
        if g.amax() <= cfg.gradient_tolerance {
            return Ok((z, iter, true));
        }
        if Instant::now() >= deadline {
            return Ok((z, iter, false));
        }
        // Start from twice the last accepted step so the step length can recover.
        alpha = (alpha * 2.0).min(1e6);
        loop {
            let trial = &z - &g * alpha;
            let ft = problem.cost(&trial)?;
            if ft <= f - ARMIJO * alpha * gnorm2 {
                z = trial;
                f = ft;
                break;
            }
            alpha *= 0.5;
            if step_small(alpha * gnorm2.sqrt(), &z, cfg.step_tolerance) {
                return Ok((z, iter + 1, true));
            }
        }
    }
    Ok((z, cfg.max_iterations, false))
}

fn trust_region(
    problem: &Problem,
    mut z: DVector<f64>,
    cfg: &PenaltyConfig,
    deadline: Instant,
) -> Result<(DVector<f64>, usize, bool)> {
    let (mut r, mut jac) = problem.linearize(&z)?;
    let mut f = r.norm_squared();
    let mut radius = 1.0;
    for iter in 0..cfg.max_iterations {
        let g = jac.transpose() * &r;
        if f == 0.0 || 2.0 * g.amax() <= cfg.gradient_tolerance {
            return Ok((z, iter, true));
        }
        if Instant::now() >= deadline {
            return Ok((z, iter, false));
        }
        let b = jac.transpose() * &jac;
        let step = trust_region_step(&b, &g, radius);
        let step_norm = step.norm();
        if step_small(step_norm, &z, cfg.step_tolerance) {
            return Ok((z, iter, true));
        }
        let predicted = -(2.0 * g.dot(&step) + step.dot(&(&b * &step)));
        let trial = &z + &step;
        let (rt, jt) = problem.linearize(&trial)?;
        let ft = rt.norm_squared();
        let rho = if predicted > 0.0 { (f - ft) / predicted } else { -1.0 };
        if rho < 0.25 {
            radius = 0.25 * step_norm.min(radius);
        } else if rho > 0.75 && step_norm >= 0.99 * radius {
            radius *= 2.0;
        }
        if rho > 0.0 && ft <= f {
            z = trial;
            r = rt;
            jac = jt;
            f = ft;
        }
        if step_small(radius, &z, cfg.step_tolerance) {
            return Ok((z, iter + 1, true));
        }
    }
    Ok((z, cfg.max_iterations, false))
}

/// Minimizer of `2 g.d + d.B.d` subject to `|d| <= radius`, for positive semidefinite `B`.
pub(crate) fn trust_region_step(b: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(b.clone());
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let gt = eig.eigenvectors.transpose() * g;
    let scale = vals.amax().max(1.0);
    let floor = 1e-14 * scale;
    // Gradient components along numerically null directions are dropped only when negligible;
    // otherwise the model is unbounded there and the step must sit on the boundary.
    let gtol = 1e-14 * gt.amax();
    let coef = |gi: f64, l: f64, mu: f64| -> f64 {
        let d = l + mu;
        if d > floor {
            -gi / d
        } else if gi.abs() <= gtol {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let norm_at = |mu: f64| -> f64 {
        gt.iter().zip(vals.iter()).map(|(&gi, &l)| coef(gi, l, mu).powi(2)).sum::<f64>().sqrt()
    };
    let step_at = |mu: f64| -> DVector<f64> {
        let c = DVector::from_iterator(gt.len(), gt.iter().zip(vals.iter()).map(|(&gi, &l)| coef(gi, l, mu)));
        &eig.eigenvectors * c
    };

    // Gauss-Newton step (minimum-norm on the null space) when it fits.
    if norm_at(0.0) <= radius {
        return step_at(0.0);
    }
    // Newton iteration on 1/|d(mu)| - 1/radius, which is nearly linear in mu.
    let mut lo = 0.0;
    let mut hi = gt.norm() / radius;
    let mut mu = hi;
    for _ in 0..100 {
        let n = norm_at(mu);
        if (n - radius).abs() <= 1e-10 * radius {
            break;
        }
        if n > radius {
            lo = mu;
        } else {
            hi = mu;
        }
        let dn: f64 = gt
            .iter()
            .zip(vals.iter())
            .map(|(&gi, &l)| gi * gi / (l + mu).powi(3))
            .sum::<f64>();
        let phi = 1.0 / n - 1.0 / radius;
        let dphi = dn / n.powi(3);
        let mut next = mu - phi / dphi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        mu = next;
    }
    let step = step_at(mu);
    let n = step.norm();
    if n > radius {
        step * (radius / n)
    } else {
        step
    }
}
