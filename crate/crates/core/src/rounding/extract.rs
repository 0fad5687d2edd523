use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::project::project_so3_flagged;
use crate::kinematics::{axis_frame, Skeleton};
use crate::sdp::{rotation_value, RotationRef, VariableLayout};
use crate::ParamVector;

/// Angles read from a relaxed solution, with per-joint diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub theta: ParamVector,
    /// Ids of joints whose extracted angle was clamped into its limits.
    pub clamped: Vec<usize>,
    /// Ids of joints whose relative rotation had no unique projection.
    pub ambiguous: Vec<usize>,
    /// Angles re-derived from the projected global rotations as `R_parent^T R_j`;
    /// zero for fixed joints.
    pub from_globals: Vec<f64>,
}

impl Extraction {
    /// Largest wrapped difference between the two angle readings.
    pub fn max_disagreement(&self) -> f64 {
        self.theta
            .angles
            .iter()
            .zip(&self.from_globals)
            .map(|(a, b)| {
                let d = (a - b).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Angle of a rotation about the axis with frame `s` (`s * axis = e_x`).
fn canonical_angle(s: &Matrix3<f64>, relative: &Matrix3<f64>) -> f64 {
    let can = s * relative * s.transpose();
    can[(2, 1)].atan2(can[(1, 1)])
}

/// Reads joint angles from the relaxed relative rotations in `x`.
///
/// Each relative rotation is projected onto SO(3), conjugated into the
/// canonical frame and read off as `atan2(R[2,1], R[1,1])`, then clamped into
/// the joint limits. Fixed joints get 0.
pub fn extract_angles(skeleton: &Skeleton, x: &[f64], layout: &VariableLayout) -> Extraction {
    let t = &layout.translation;
    let translation = Vector3::new(x[t.start], x[t.start + 1], x[t.start + 2]);
    let n = skeleton.len();
    let mut angles = vec![0.0; n];
    let mut from_globals = vec![0.0; n];
    let mut clamped = Vec::new();
    let mut ambiguous = Vec::new();
    let projected = |rot: RotationRef| project_so3_flagged(&rotation_value(rot, x)).rotation;

    for (idx, joint) in skeleton.joints().iter().enumerate() {
        let Some(rv) = &layout.joints[idx].revolute else { continue };
        let frame = axis_frame(&joint.axis);
        let rel = project_so3_flagged(&rotation_value(rv.relative.rotation(), x));
        if rel.ambiguous {
            ambiguous.push(joint.id);
        }
        let raw = canonical_angle(&frame, &rel.rotation);
        let angle = joint.limits.clamp(raw);
        if angle != raw {
            clamped.push(joint.id);
        }
        angles[idx] = angle;

        let parent = match skeleton.parent_index(idx) {
            Some(p) => projected(layout.joints[p].rotation),
            None => Matrix3::identity(),
        };
        let global = projected(rv.global.rotation());
        from_globals[idx] = canonical_angle(&frame, &(parent.transpose() * global));
    }
    Extraction { theta: ParamVector::new(translation, angles), clamped, ambiguous, from_globals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward_kinematics;
    use crate::sdp::{build_sdp, embed_ground_truth};
    use crate::{Joint, Observation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn arm() -> Skeleton {
        Skeleton::new(
            "arm",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -PI, PI),
                Joint::revolute(2, 1, Vector3::new(0.0, 0.6, 0.8), Vector3::new(0.5, 0.0, 0.0), -1.0, 2.0),
                Joint::revolute(3, 2, -Vector3::x(), Vector3::new(0.0, 0.4, 0.1), -2.5, 0.3),
                Joint::fixed(4, 3, Vector3::new(0.3, 0.0, 0.0)),
            ],
        )
        .unwrap()
    }

    fn embedded(theta: &ParamVector) -> (Skeleton, Vec<f64>, VariableLayout) {
        let s = arm();
        let x = forward_kinematics(&s, theta).unwrap();
        let obs = Observation::from_pairs((1..=4).map(|i| (i, x[i - 1]))).unwrap();
        let (program, layout) = build_sdp(&s, &obs).unwrap();
        let e = embed_ground_truth(&s, &obs, theta, &program, &layout).unwrap();
        (s, e.x, layout)
    }

    #[test]
    fn exact_embedding_returns_its_angles() {
        let theta = ParamVector::new(Vector3::new(0.3, -0.2, 1.0), vec![2.9, -0.7, 0.25, 0.0]);
        let (s, x, layout) = embedded(&theta);
        let e = extract_angles(&s, &x, &layout);
        assert!((e.theta.translation - theta.translation).norm() < 1e-12);
        for (a, b) in e.theta.angles.iter().zip(&theta.angles) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(e.clamped.is_empty() && e.ambiguous.is_empty());
        assert!(e.max_disagreement() < 1e-9);
    }

    #[test]
    fn identity_canonical_rotation_reads_zero() {
        assert_eq!(canonical_angle(&Matrix3::identity(), &Matrix3::identity()), 0.0);
    }

    #[test]
    fn out_of_range_angle_is_clamped_and_reported() {
        // Joint 2 allows [-1, 2]; embed 2.5 by bypassing the limits in the embedding.
        let theta = ParamVector::new(Vector3::zeros(), vec![0.1, 2.5, -0.3, 0.0]);
        let (s, x, layout) = embedded(&theta);
        let e = extract_angles(&s, &x, &layout);
        assert_eq!(e.clamped, vec![2]);
        assert_eq!(e.theta.angles[1], 2.0);
        assert!((e.theta.angles[2] + 0.3).abs() < 1e-9);
    }

    #[test]
    fn perturbed_relaxation_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let theta = ParamVector::new(
                Vector3::zeros(),
                vec![rng.random_range(-3.0..3.0), rng.random_range(-0.9..1.9), rng.random_range(-2.4..0.2), 0.0],
            );
            let (s, mut x, layout) = embedded(&theta);
            for v in x.iter_mut() {
                *v += rng.random_range(-1e-3..1e-3);
            }
            let e = extract_angles(&s, &x, &layout);
            for (a, b) in e.theta.angles.iter().zip(&theta.angles) {
                assert!((a - b).abs() <= 5e-3, "{a} vs {b}");
            }
        }
    }
}
