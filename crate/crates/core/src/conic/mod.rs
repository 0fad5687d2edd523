//! Conic solver: an embedded interior-point method, SDPA file exchange and a
//! bridge to external SDP solvers.

mod external;
mod ipm;
pub mod ldl;
mod presolve;
mod sdpa;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdp::ConicProgram;

pub use external::{parse_solution, solve_external, ExternalSolver};
pub use sdpa::{read_sdpa, sdpa_from_str, sdpa_to_string, write_sdpa};

/// Environment variable selecting the external-solver bridge (a command template).
pub const SOLVER_COMMAND_ENV: &str = "SDPIK_SOLVER_COMMAND";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    TimeOut,
    NumericalFailure,
}

impl SolveStatus {
    /// Whether the primal values are usable as a relaxation solution.
    pub fn has_solution(&self) -> bool {
        matches!(self, Self::Optimal | Self::NearOptimal | Self::TimeOut)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::NearOptimal => "near-optimal",
            Self::Infeasible => "infeasible",
            Self::TimeOut => "time-out",
            Self::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Backend {
    Embedded,
    External(ExternalSolver),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Duality gap relative to `max(1, |objective|)`.
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Seconds.
    pub time_budget: f64,
    pub backend: Backend,
    /// Print one line per iteration to stderr.
    #[serde(default)]
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-7,
            feasibility_tolerance: 1e-8,
            max_iterations: 200,
            time_budget: 120.0,
            backend: Backend::Embedded,
            verbose: false,
        }
    }
}

impl SolverOptions {
    /// Defaults, switched to the external bridge when [`SOLVER_COMMAND_ENV`] is set.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Ok(cmd) = std::env::var(SOLVER_COMMAND_ENV) {
            if !cmd.trim().is_empty() {
                opts.backend = Backend::External(ExternalSolver::new(cmd));
            }
        }
        opts
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tolerance > 0.0 && self.feasibility_tolerance > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_iterations == 0 || !(self.time_budget > 0.0) {
            return Err(Error::Config("solver budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a conic solve. Blocks are listed in program order; diagonal
/// blocks are stored as diagonal matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub message: String,
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Primal block values `F0 + sum x_i F_i`.
    pub blocks: Vec<DMatrix<f64>>,
    pub dual_blocks: Vec<DMatrix<f64>>,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl SolverReport {
    pub fn summary(&self) -> SolverSummary {
        SolverSummary {
            status: self.status,
            message: self.message.clone(),
            objective: self.objective,
            dual_objective: self.dual_objective,
            relative_gap: self.relative_gap,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            iterations: self.iterations,
            wall_time: self.wall_time,
        }
    }
}

/// Scalar part of a [`SolverReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: SolveStatus,
    pub message: String,
    pub objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub wall_time: f64,
}

/// Solves `program` with the configured backend.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SolverReport> {
    opts.validate()?;
    match &opts.backend {
        Backend::Embedded => ipm::solve_embedded(program, opts),
        Backend::External(ext) => solve_external(program, opts, ext),
    }
}
