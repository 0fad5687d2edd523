use nalgebra::{Matrix3, Vector3};

/// Relative tolerance below which singular-value ties make the projection ambiguous.
const TIE_TOLERANCE: f64 = 1e-9;

/// Nearest rotation together with a flag for non-unique minimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub rotation: Matrix3<f64>,
    /// The Frobenius-nearest rotation is not unique (rank-deficient input, or a
    /// reflection whose two smallest singular values coincide).
    pub ambiguous: bool,
}

/// Frobenius-nearest rotation to `m`.
pub fn project_so3(m: &Matrix3<f64>) -> Matrix3<f64> {
    project_so3_flagged(m).rotation
}

/// [`project_so3`] with an ambiguity flag.
///
/// Singular values are ordered decreasingly with ties kept in the order the
/// decomposition returned them, so the sign correction always lands on the
/// last column of the sorted factors. That makes equal inputs give equal
/// outputs even when the minimizer is not unique.
pub fn project_so3_flagged(m: &Matrix3<f64>) -> Projection {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = Vector3::from_fn(|i, _| svd.singular_values[order[i]]);
    let u = Matrix3::from_fn(|r, c| u[(r, order[c])]);
    let v_t = Matrix3::from_fn(|r, c| v_t[(order[r], c)]);

    let d = (u * v_t).determinant().signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    let ambiguous = sigma[1] + d * sigma[2] <= TIE_TOLERANCE * scale;
    Projection { rotation, ambiguous }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::rodrigues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_rotation(r: &Matrix3<f64>) -> bool {
        (r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12 && (r.determinant() - 1.0).abs() < 1e-12
    }

    #[test]
    fn rotations_are_fixed_points() {
        let r = rodrigues(&Vector3::new(1.0, 2.0, -0.5).normalize(), 2.3).unwrap();
        let p = project_so3_flagged(&r);
        assert!((p.rotation - r).abs().max() < 1e-12);
        assert!(!p.ambiguous);
    }

    #[test]
    fn positive_scaling_is_removed() {
        assert!((project_so3(&(Matrix3::identity() * 2.0)) - Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn reflection_is_ambiguous_but_proper() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let p = project_so3_flagged(&m);
        assert!(is_rotation(&p.rotation));
        assert!(p.ambiguous);
        // Any minimizer flips exactly one of the tied axes: distance 2.
        assert!(((p.rotation - m).norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_input_is_ambiguous() {
        let m = Vector3::new(1.0, 0.0, 0.0) * Vector3::new(0.0, 1.0, 0.0).transpose();
        let p = project_so3_flagged(&m);
        assert!(is_rotation(&p.rotation));
        assert!(p.ambiguous);
    }

    #[test]
    fn result_is_deterministic() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert_eq!(project_so3(&m), project_so3(&m));
    }

    #[test]
    fn beats_random_rotations_on_a_reflection() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let best = (project_so3(&m) - m).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ));
            assert!((q.to_rotation_matrix().into_inner() - m).norm() >= best - 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn output_is_a_rotation(v in proptest::collection::vec(-5.0f64..5.0, 9)) {
                let m = Matrix3::from_column_slice(&v);
                prop_assert!(is_rotation(&project_so3(&m)));
            }

            #[test]
            fn no_nearby_rotation_is_closer(v in proptest::collection::vec(-2.0f64..2.0, 9), w in proptest::collection::vec(-1.0f64..1.0, 3)) {
                let m = Matrix3::from_column_slice(&v);
                let r = project_so3(&m);
                let axis = Vector3::new(w[0], w[1], w[2]);
                prop_assume!(axis.norm() > 1e-3);
                let nudged = r * rodrigues(&axis.normalize(), 1e-3).unwrap();
                prop_assert!((nudged - m).norm() >= (r - m).norm() - 1e-12);
            }
        }
    }
}
