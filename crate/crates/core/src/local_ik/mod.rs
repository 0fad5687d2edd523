//! Local baselines for the penalized IK objective and the shared cost metric.

mod cost;
mod init;
mod solver;

pub use cost::{fit_error, ik_cost, limit_violation_squared, max_limit_violation, penalty_cost, penalty_gradient};
pub use init::{random_init, random_init_rng, random_init_with};
pub use solver::{solve_local, LocalMethod, LocalResult, PenaltyConfig};
