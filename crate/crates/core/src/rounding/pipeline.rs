use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::extract::extract_angles;
use crate::conic::{solve, SolveStatus, SolverOptions, SolverSummary};
use crate::error::Result;
use crate::local_ik::{fit_error, ik_cost, solve_local, PenaltyConfig};
use crate::sdp::build_sdp;
use crate::{Joint, Observation, ParamVector, Skeleton};

/// Options of the full relaxation-rounding-refinement pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpIkOptions {
    pub solver: SolverOptions,
    /// Refinement settings; the default is the trust-region method with `lambda = 100`.
    pub refine: PenaltyConfig,
}

/// Stage-by-stage record of one [`sdp_ik`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: SolverSummary,
    pub num_vars: usize,
    pub num_equalities: usize,
    pub num_blocks: usize,
    /// Joints clamped into their limits before refinement.
    pub clamped: Vec<usize>,
    /// Joints whose relative rotation had no unique projection.
    pub ambiguous: Vec<usize>,
    /// Largest difference between angles read from relative rotations and
    /// from projected globals.
    pub extraction_disagreement: f64,
    pub refine_iterations: usize,
    pub refine_converged: bool,
    pub build_time: f64,
    pub refine_time: f64,
    /// Length unit of the conditioned instance the relaxation was built on.
    pub length_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IKResult {
    pub theta: ParamVector,
    /// Relaxation objective: a lower bound on the fit error when the solver converged.
    pub sdp_bound: f64,
    /// IK cost of the extracted, clamped angles.
    pub rounded_cost: f64,
    /// IK cost after local refinement.
    pub refined_cost: f64,
    /// Fit error of `theta` minus `sdp_bound`.
    pub tightness_gap: f64,
    pub diagnostics: Diagnostics,
}

impl IKResult {
    /// Whether the relaxation solve produced a usable bound.
    pub fn solver_succeeded(&self) -> bool {
        matches!(self.diagnostics.solver.status, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

/// Translation and uniform scaling that center the targets and bring the mean
/// nonzero bone length to 1. Angles are invariant under both, and conditioning
/// the relaxation this way keeps lengths on the scale of the rotation entries.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Conditioning {
    center: Vector3<f64>,
    scale: f64,
}

impl Conditioning {
    fn of(skeleton: &Skeleton, obs: &Observation) -> Self {
        let center = obs.entries().iter().map(|e| e.target).sum::<Vector3<f64>>() / obs.len() as f64;
        let lengths: Vec<f64> = skeleton.joints().iter().map(|j| j.bone.norm()).filter(|&l| l > 0.0).collect();
        let scale = if lengths.is_empty() { 1.0 } else { lengths.iter().sum::<f64>() / lengths.len() as f64 };
        Self { center, scale }
    }

    fn apply(&self, skeleton: &Skeleton, obs: &Observation) -> Result<(Skeleton, Observation)> {
        let joints = skeleton.joints().iter().map(|j| Joint { bone: j.bone / self.scale, ..j.clone() }).collect();
        let scaled = Skeleton::new(skeleton.name(), joints)?;
        let targets = obs.entries().iter().map(|e| (e.target - self.center) / self.scale);
        Ok((scaled, obs.with_targets(targets)))
    }

    fn restore(&self, mut theta: ParamVector) -> ParamVector {
        theta.translation = self.center + theta.translation * self.scale;
        theta
    }
}

/// Solves an IK instance by relaxation, rounding and local refinement.
///
/// A solver that stops without a certified solution still yields an
/// extraction from its best iterate, which is refined as usual; the status is
/// carried in the diagnostics.
pub fn sdp_ik(skeleton: &Skeleton, obs: &Observation, options: &SdpIkOptions) -> Result<IKResult> {
    options.refine.validate()?;
    obs.validate(skeleton)?;
    let clock = Instant::now();
    let conditioning = Conditioning::of(skeleton, obs);
    let (unit_skeleton, unit_obs) = conditioning.apply(skeleton, obs)?;
    let (program, layout) = build_sdp(&unit_skeleton, &unit_obs)?;
    let build_time = clock.elapsed().as_secs_f64();

    let report = solve(&program, &options.solver)?;
    let sdp_bound = report.objective * conditioning.scale.powi(2);
    let extraction = extract_angles(&unit_skeleton, &report.x, &layout);
    let rounded = conditioning.restore(extraction.theta.clone());
    let rounded_cost = ik_cost(skeleton, obs, &rounded)?;

    let refine_clock = Instant::now();
    let local = solve_local(skeleton, obs, &rounded, &options.refine)?;
    let refine_time = refine_clock.elapsed().as_secs_f64();

    let fit = fit_error(skeleton, obs, &local.theta)?;
    Ok(IKResult {
        sdp_bound,
        rounded_cost,
        refined_cost: local.ik_cost,
        tightness_gap: fit - sdp_bound,
        diagnostics: Diagnostics {
            solver: report.summary(),
            num_vars: program.num_vars,
            num_equalities: program.equalities.len(),
            num_blocks: program.blocks.len(),
            extraction_disagreement: extraction.max_disagreement(),
            clamped: extraction.clamped,
            ambiguous: extraction.ambiguous,
            refine_iterations: local.iterations,
            refine_converged: local.converged,
            build_time,
            refine_time,
            length_scale: conditioning.scale,
        },
        theta: local.theta,
    })
}
