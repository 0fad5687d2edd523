//! Forward kinematics: homogeneous-product form, parent recursion and the
//! analytic Jacobian of observed positions.

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};

use super::rotation::rotation_about;
use super::skeleton::{Joint, Observation, ParamVector, Skeleton};
use crate::error::Result;

/// Joint positions and global rotations of a posed skeleton, indexed by 0-based joint index.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
}

/// Rotation contributed by a joint: Rodrigues for revolute joints, identity for fixed ones.
pub fn joint_rotation(joint: &Joint, angle: f64) -> Matrix3<f64> {
    if joint.is_fixed() {
        Matrix3::identity()
    } else {
        rotation_about(&joint.axis, angle)
    }
}

/// Homogeneous transform from the joint frame to its parent frame.
pub fn local_transform(joint: &Joint, angle: f64) -> Matrix4<f64> {
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&joint_rotation(joint, angle));
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&joint.bone);
    t
}

/// Evaluates the pose by the parent recursion
/// `p_j = p_parent + R_parent v_j`, `R_j = R_parent K(a_j, theta_j)`.
pub fn pose(skeleton: &Skeleton, params: &ParamVector) -> Result<Pose> {
    params.check_dim(skeleton)?;
    let n = skeleton.len();
    let mut positions = Vec::with_capacity(n);
    let mut rotations: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    for (k, joint) in skeleton.joints().iter().enumerate() {
        let (p_parent, r_parent) = match skeleton.parent_index(k) {
            Some(p) => (positions[p], rotations[p]),
            None => (params.translation, Matrix3::identity()),
        };
        positions.push(p_parent + r_parent * joint.bone);
        rotations.push(r_parent * joint_rotation(joint, params.angles[k]));
    }
    Ok(Pose {
        positions,
        rotations,
    })
}

/// Joint positions `x_j(Theta)` via the parent recursion.
pub fn forward_kinematics(skeleton: &Skeleton, params: &ParamVector) -> Result<Vec<Vector3<f64>>> {
    Ok(pose(skeleton, params)?.positions)
}

/// Joint positions via the explicit product of homogeneous transforms along each
/// root-to-joint path, applied to the homogeneous origin.
pub fn forward_kinematics_product(
    skeleton: &Skeleton,
    params: &ParamVector,
) -> Result<Vec<Vector3<f64>>> {
    params.check_dim(skeleton)?;
    let origin = Vector4::new(0.0, 0.0, 0.0, 1.0);
    Ok((0..skeleton.len())
        .map(|k| {
            let chain = skeleton
                .path_from_root(k)
                .into_iter()
                .fold(Matrix4::identity(), |acc, i| {
                    acc * local_transform(&skeleton.joints()[i], params.angles[i])
                });
            params.translation + (chain * origin).xyz()
        })
        .collect())
}

/// Global rotations `R_j = R_parent R_j^rel` with the root's parent rotation fixed to identity.
pub fn global_rotations(skeleton: &Skeleton, params: &ParamVector) -> Result<Vec<Matrix3<f64>>> {
    Ok(pose(skeleton, params)?.rotations)
}

/// Jacobian of the stacked observed positions with respect to `[t, theta]`.
///
/// Rows follow the observation order, three per observed joint.
pub fn fk_jacobian(
    skeleton: &Skeleton,
    params: &ParamVector,
    obs: &Observation,
) -> Result<DMatrix<f64>> {
    let pose = pose(skeleton, params)?;
    Ok(jacobian_from_pose(skeleton, &pose, obs))
}

pub(crate) fn jacobian_from_pose(skeleton: &Skeleton, pose: &Pose, obs: &Observation) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(3 * obs.len(), skeleton.param_dim());
    for (row, entry) in obs.entries().iter().enumerate() {
        let j = entry.joint - 1;
        let x = pose.positions[j];
        for a in 0..3 {
            jac[(3 * row + a, a)] = 1.0;
        }
        for i in skeleton.path_from_root(j) {
            let joint = &skeleton.joints()[i];
            if joint.is_fixed() || i == j {
                continue;
            }
            // R_i a_i equals R_parent a_i because K(a, .) fixes its own axis.
            let world_axis = pose.rotations[i] * joint.axis;
            let col = world_axis.cross(&(x - pose.positions[i]));
            jac.fixed_view_mut::<3, 1>(3 * row, 3 + i).copy_from(&col);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::skeleton::Joint;
    use std::f64::consts::{FRAC_PI_2, PI};

    // Planar arm: base joint at the anchor, an elbow one unit out, and a fixed tip.
    fn planar_arm() -> Skeleton {
        Skeleton::new(
            "arm",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -PI, PI),
                Joint::revolute(2, 1, Vector3::z(), Vector3::x(), -PI, PI),
                Joint::fixed(3, 2, Vector3::x()),
            ],
        )
        .unwrap()
    }

    fn params(angles: &[f64]) -> ParamVector {
        ParamVector::new(Vector3::zeros(), angles.to_vec())
    }

    fn close(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn straight_arm() {
        let x = forward_kinematics(&planar_arm(), &params(&[0.0, 0.0, 0.0])).unwrap();
        assert!(close(&x[1], &Vector3::new(1.0, 0.0, 0.0)));
        assert!(close(&x[2], &Vector3::new(2.0, 0.0, 0.0)));
    }

    #[test]
    fn base_quarter_turn_rotates_whole_arm() {
        let x = forward_kinematics(&planar_arm(), &params(&[FRAC_PI_2, 0.0, 0.0])).unwrap();
        assert!(close(&x[1], &Vector3::new(0.0, 1.0, 0.0)));
        assert!(close(&x[2], &Vector3::new(0.0, 2.0, 0.0)));
    }

    #[test]
    fn both_quarter_turns_match_explicit_product() {
        let skel = planar_arm();
        let p = params(&[FRAC_PI_2, FRAC_PI_2, 0.0]);
        let x = forward_kinematics(&skel, &p).unwrap();
        // Oracle: hand-multiplied 4x4 chain T1 T2 T3 applied to the origin.
        let t = |j: usize| local_transform(&skel.joints()[j], p.angles[j]);
        let tip = (t(0) * t(1) * t(2) * Vector4::new(0.0, 0.0, 0.0, 1.0)).xyz();
        assert!(close(&x[2], &tip));
        assert!(close(&x[1], &Vector3::new(0.0, 1.0, 0.0)));
        assert!(close(&x[2], &Vector3::new(-1.0, 1.0, 0.0)));
        let r = global_rotations(&skel, &p).unwrap();
        let half_turn = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert!((r[1] - half_turn).abs().max() < 1e-12);
    }

    #[test]
    fn local_transform_cases() {
        let tip = Joint::fixed(1, 0, Vector3::z());
        let t = local_transform(&tip, 1.3);
        assert_eq!(t.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
        assert_eq!(t.fixed_view::<3, 1>(0, 3).into_owned(), Vector3::z());

        let v = Vector3::new(0.3, -0.2, 0.9);
        let j = Joint::revolute(1, 0, Vector3::x(), v, -1.0, 1.0);
        let t = local_transform(&j, 0.0);
        assert_eq!(t.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
        assert_eq!(t.fixed_view::<3, 1>(0, 3).into_owned(), v);
        assert_eq!(t.row(3).into_owned(), nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));

        let j = Joint::revolute(1, 0, Vector3::z(), Vector3::x(), -PI, PI);
        let t = local_transform(&j, PI);
        let expected = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert!((t.fixed_view::<3, 3>(0, 0) - expected).abs().max() < 1e-15);
        assert_eq!(t.fixed_view::<3, 1>(0, 3).into_owned(), Vector3::x());
    }

    #[test]
    fn translation_columns_are_identity() {
        let skel = planar_arm();
        let obs = Observation::from_pairs([(2, Vector3::zeros()), (3, Vector3::zeros())]).unwrap();
        let jac = fk_jacobian(&skel, &params(&[0.4, -0.3, 0.0]), &obs).unwrap();
        for row in 0..2 {
            let block = jac.fixed_view::<3, 3>(3 * row, 0).into_owned();
            assert_eq!(block, Matrix3::identity());
        }
    }

    #[test]
    fn single_hinge_tangent() {
        let skel = Skeleton::new(
            "hinge",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -PI, PI),
                Joint::fixed(2, 1, Vector3::x()),
            ],
        )
        .unwrap();
        let obs = Observation::from_pairs([(2, Vector3::zeros())]).unwrap();
        let jac = fk_jacobian(&skel, &params(&[0.0, 0.0]), &obs).unwrap();
        assert!((jac.column(3) - nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(forward_kinematics(&planar_arm(), &params(&[0.0])).is_err());
    }
}
