//! Axis-angle rotations and the fixed frames that map joint axes onto `e_x`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Tolerance on `|axis| - 1` accepted by [`rodrigues`].
pub const UNIT_AXIS_TOLERANCE: f64 = 1e-9;

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Rotation by `angle` radians about the unit vector `axis`.
///
/// Evaluates `I + sin(angle) [a]x + (1 - cos(angle)) [a]x^2`.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    if (axis.norm() - 1.0).abs() > UNIT_AXIS_TOLERANCE {
        return Err(Error::NonUnitAxis([axis.x, axis.y, axis.z]));
    }
    Ok(rotation_about(axis, angle))
}

/// Unchecked variant of [`rodrigues`] for axes already validated by a [`Skeleton`](super::Skeleton).
pub(crate) fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = skew(axis);
    let (s, c) = angle.sin_cos();
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// Deterministic rotation `S` with `S * axis == e_x`.
///
/// `e_x` maps to the identity and `-e_x` to the half turn about `e_z`. Axes in
/// the hemisphere `x < 0` are first flipped by that half turn, which keeps the
/// closed-form minimal rotation away from its antipodal singularity.
pub fn axis_frame(axis: &Vector3<f64>) -> Matrix3<f64> {
    let half_turn = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
    if axis.x < 0.0 {
        let flipped = half_turn * axis;
        minimal_rotation_to_ex(&flipped) * half_turn
    } else {
        minimal_rotation_to_ex(axis)
    }
}

// Smallest rotation taking `a` (with a.x >= 0) onto e_x.
fn minimal_rotation_to_ex(a: &Vector3<f64>) -> Matrix3<f64> {
    let ex = Vector3::x();
    let v = a.cross(&ex);
    let c = a.dot(&ex);
    let k = skew(&v);
    Matrix3::identity() + k + k * k * (1.0 / (1.0 + c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) {
        assert!((a - b).abs().max() <= tol, "{a} vs {b}");
    }

    fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
        (r.transpose() * r - Matrix3::identity()).abs().max() <= tol
            && (r.determinant() - 1.0).abs() <= tol
    }

    // Exponential map through a truncated power series of angle*[a]x.
    fn expm_series(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
        let a = skew(axis) * angle;
        let mut term = Matrix3::identity();
        let mut sum = Matrix3::identity();
        for k in 1..40 {
            term = term * a / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn zero_angle_is_identity() {
        let a = Vector3::new(0.3, -0.4, 0.5).normalize();
        assert_close(&rodrigues(&a, 0.0).unwrap(), &Matrix3::identity(), 0.0);
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rodrigues(&Vector3::z(), FRAC_PI_2).unwrap();
        assert!((r * Vector3::x() - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn diagonal_axis_third_turn_is_cyclic_permutation() {
        let a = Vector3::new(1.0, 1.0, 1.0).normalize();
        let r = rodrigues(&a, 2.0 * PI / 3.0).unwrap();
        let oracle = expm_series(&a, 2.0 * PI / 3.0);
        assert_close(&r, &oracle, 1e-12);
        let perm = Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert_close(&r, &perm, 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(matches!(
            rodrigues(&Vector3::new(1.0, 1.0, 0.0), 0.3),
            Err(Error::NonUnitAxis(_))
        ));
    }

    #[test]
    fn axis_frame_special_cases() {
        assert_eq!(axis_frame(&Vector3::x()), Matrix3::identity());
        let s = axis_frame(&-Vector3::x());
        assert!((s * -Vector3::x() - Vector3::x()).norm() < 1e-15);
        assert!(is_rotation(&s, 1e-15));
    }

    #[test]
    fn axis_frame_conjugates_ex_rotation() {
        for axis in [Vector3::y(), -Vector3::x(), Vector3::z(), -Vector3::y()] {
            let s = axis_frame(&axis);
            assert!((s * axis - Vector3::x()).norm() < 1e-12);
            for i in 0..10 {
                let theta = -3.0 + 0.61 * i as f64;
                let direct = rotation_about(&axis, theta);
                let conj = s.transpose() * rotation_about(&Vector3::x(), theta) * s;
                assert_close(&direct, &conj, 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit_axis() -> impl Strategy<Value = Vector3<f64>> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
                .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
                .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn rodrigues_is_a_rotation(axis in unit_axis(), theta in -10.0..10.0f64) {
                let r = rodrigues(&axis, theta).unwrap();
                prop_assert!(is_rotation(&r, 1e-12));
            }

            #[test]
            fn conjugation_identity(axis in unit_axis(), theta in -4.0..4.0f64) {
                let s = axis_frame(&axis);
                prop_assert!(is_rotation(&s, 1e-12));
                prop_assert!((s * axis - Vector3::x()).norm() <= 1e-12);
                let conj = s.transpose() * rotation_about(&Vector3::x(), theta) * s;
                prop_assert!((conj - rotation_about(&axis, theta)).abs().max() <= 1e-10);
            }
        }
    }
}
