use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::layout::{lift_index, LiftedRotation, VariableLayout};
use super::program::{BlockKind, ConicProgram};
use crate::error::Result;
use crate::kinematics::{joint_rotation, pose, Observation, ParamVector, Skeleton};

/// How well an assignment satisfies a program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub objective: f64,
    pub max_equality_residual: f64,
    /// Smallest eigenvalue over the PSD blocks.
    pub min_psd_eigenvalue: f64,
    /// Smallest entry of the diagonal (half-space) blocks; `+inf` without one.
    pub min_diagonal_entry: f64,
}

impl ResidualReport {
    pub fn evaluate(program: &ConicProgram, x: &[f64]) -> Self {
        let mut min_psd = f64::INFINITY;
        let mut min_diag = f64::INFINITY;
        for b in &program.blocks {
            let v = b.min_eigenvalue(x);
            match b.kind {
                BlockKind::Psd => min_psd = min_psd.min(v),
                BlockKind::Diagonal => min_diag = min_diag.min(v),
            }
        }
        Self {
            objective: program.objective_value(x),
            max_equality_residual: program.max_equality_residual(x),
            min_psd_eigenvalue: min_psd,
            min_diagonal_entry: min_diag,
        }
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_equality_residual <= tol && self.min_psd_eigenvalue >= -tol && self.min_diagonal_entry >= -tol
    }
}

/// Rank-one assignment of a parameter vector and its residual report.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub x: Vec<f64>,
    pub report: ResidualReport,
}

/// Builds the assignment `(t, p_j, r_j, r_rel, r_can, c, s, 𝐑 = r r^T, q_j = |y_j - p_j|^2)`
/// induced by `params` and evaluates it against `program`.
pub fn embed_ground_truth(
    skeleton: &Skeleton,
    obs: &Observation,
    params: &ParamVector,
    program: &ConicProgram,
    layout: &VariableLayout,
) -> Result<Embedding> {
    let pose = pose(skeleton, params)?;
    let mut x = vec![0.0; layout.num_vars];
    for a in 0..3 {
        x[layout.translation.start + a] = params.translation[a];
    }
    for (idx, joint) in skeleton.joints().iter().enumerate() {
        let vars = &layout.joints[idx];
        for a in 0..3 {
            x[vars.position.start + a] = pose.positions[idx][a];
        }
        if let Some(rv) = &vars.revolute {
            let theta = params.angles[idx];
            let (c, s) = (theta.cos(), theta.sin());
            let canonical = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
            write_lifted(&mut x, &rv.global, &pose.rotations[idx]);
            write_lifted(&mut x, &rv.relative, &joint_rotation(joint, theta));
            write_lifted(&mut x, &rv.canonical, &canonical);
            x[rv.cos] = c;
            x[rv.sin] = s;
        }
    }
    for (entry, &(idx, q)) in obs.entries().iter().zip(&layout.epigraph) {
        x[q] = (entry.target - pose.positions[idx]).norm_squared();
    }
    let report = ResidualReport::evaluate(program, &x);
    Ok(Embedding { x, report })
}

fn write_lifted(x: &mut [f64], rot: &LiftedRotation, r: &Matrix3<f64>) {
    // Column-major storage matches vec(R).
    let v = r.as_slice();
    x[rot.r.clone()].copy_from_slice(v);
    for a in 0..9 {
        for b in a..9 {
            x[rot.lift.start + lift_index(a, b)] = v[a] * v[b];
        }
    }
}
