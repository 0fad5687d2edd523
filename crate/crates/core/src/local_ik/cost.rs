use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::kinematics::{jacobian_from_pose, pose, JointLimits, Observation, ParamVector, Skeleton};

/// Sum of squared position errors `f(Theta)` over the observed joints.
pub fn fit_error(skeleton: &Skeleton, obs: &Observation, params: &ParamVector) -> Result<f64> {
    let pose = pose(skeleton, params)?;
    Ok(obs
        .entries()
        .iter()
        .map(|e| (e.target - pose.positions[e.joint - 1]).norm_squared())
        .sum())
}

/// Root-mean-square position error, `sqrt(f / |J|)`.
pub fn ik_cost(skeleton: &Skeleton, obs: &Observation, params: &ParamVector) -> Result<f64> {
    Ok((fit_error(skeleton, obs, params)? / obs.len() as f64).sqrt())
}

/// Sum of squared interval distances over the joint angles.
pub fn limit_violation_squared(skeleton: &Skeleton, params: &ParamVector) -> f64 {
    skeleton
        .joints()
        .iter()
        .zip(&params.angles)
        .map(|(j, &a)| j.limits.distance(a).powi(2))
        .sum()
}

/// Largest interval distance over the joint angles.
pub fn max_limit_violation(skeleton: &Skeleton, params: &ParamVector) -> f64 {
    skeleton
        .joints()
        .iter()
        .zip(&params.angles)
        .map(|(j, &a)| j.limits.distance(a))
        .fold(0.0, f64::max)
}

/// Penalized objective `f(Theta) + lambda * sum_i dist(theta_i, I_i)^2`.
///
/// The translation is unconstrained and fixed joints carry no penalty.
pub fn penalty_cost(skeleton: &Skeleton, obs: &Observation, params: &ParamVector, lambda: f64) -> Result<f64> {
    Ok(fit_error(skeleton, obs, params)? + lambda * limit_violation_squared(skeleton, params))
}

/// Analytic gradient of [`penalty_cost`] with respect to `[t, theta]`.
pub fn penalty_gradient(
    skeleton: &Skeleton,
    obs: &Observation,
    params: &ParamVector,
    lambda: f64,
) -> Result<DVector<f64>> {
    let (residual, jacobian) = residuals(skeleton, obs, params, lambda)?;
    Ok(jacobian.transpose() * residual * 2.0)
}

// Signed violation: negative below the interval, positive above it.
fn signed_violation(limits: &JointLimits, angle: f64) -> f64 {
    match *limits {
        JointLimits::Range { lower, .. } if angle < lower => angle - lower,
        JointLimits::Range { upper, .. } if angle > upper => angle - upper,
        _ => 0.0,
    }
}

/// Residual vector whose squared norm is the penalized objective, and its Jacobian.
///
/// Rows: `x_j - y_j` per observed joint, then `sqrt(lambda)` times the signed
/// limit violation per joint angle.
pub(crate) fn residuals(
    skeleton: &Skeleton,
    obs: &Observation,
    params: &ParamVector,
    lambda: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let pose = pose(skeleton, params)?;
    let m = 3 * obs.len();
    let n = skeleton.len();
    let mut r = DVector::zeros(m + n);
    for (row, e) in obs.entries().iter().enumerate() {
        let d = pose.positions[e.joint - 1] - e.target;
        r.fixed_rows_mut::<3>(3 * row).copy_from(&d);
    }
    let fk = jacobian_from_pose(skeleton, &pose, obs);
    let mut jac = DMatrix::zeros(m + n, skeleton.param_dim());
    jac.view_mut((0, 0), (m, skeleton.param_dim())).copy_from(&fk);
    let w = lambda.sqrt();
    for (i, joint) in skeleton.joints().iter().enumerate() {
        let v = signed_violation(&joint.limits, params.angles[i]);
        if v != 0.0 {
            r[m + i] = w * v;
            jac[(m + i, 3 + i)] = w;
        }
    }
    Ok((r, jac))
}
