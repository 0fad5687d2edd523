use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::layout::{vec_index, LiftedRotation, RotationRef};
use super::program::{Affine, ConeBlock, LinearEquality};
use crate::kinematics::JointLimits;

/// Interval widths at or above this drop the half-space cut.
pub const FREE_WIDTH: f64 = 2.0 * PI - 1e-9;

// Cyclic index triples (a, b, c) with e_a x e_b = e_c.
const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Constraints tying a rotation vector to its lift: the 10x10 PSD block
/// `[[1, r^T], [r, 𝐑]]`, the lifted orthogonality equalities in both directions and
/// the lifted right-hand-rule equalities.
///
/// Redundant equations are left out to keep the equality system full rank: the
/// `(2, 2)` diagonal of `R R^T = I` follows from the rest (both sets share the
/// trace), and the row cross products `R[a,:] x R[b,:] = R[c,:]` state the same
/// cofactor identities `R = cof(R)` as the column ones, which lift to identical
/// linear equations.
pub fn lifted_rotation_constraints(rot: &LiftedRotation, label: &str) -> (ConeBlock, Vec<LinearEquality>) {
    let mut block = ConeBlock::psd(10, format!("{label}/lift"));
    block.add_constant(0, 0, 1.0);
    for m in 0..9 {
        block.add_coefficient(rot.r.start + m, 0, 1 + m, 1.0);
        for n in m..9 {
            block.add_coefficient(rot.lift_var(m, n), 1 + m, 1 + n, 1.0);
        }
    }

    let mut eqs = Vec::with_capacity(20);
    for a in 0..3 {
        for b in a..3 {
            let delta = if a == b { 1.0 } else { 0.0 };
            // Columns: sum_i R[i,a] R[i,b].
            let terms = (0..3).map(|i| (rot.lift_var(vec_index(i, a), vec_index(i, b)), 1.0)).collect();
            eqs.push(LinearEquality { terms, rhs: delta });
            if (a, b) == (2, 2) {
                continue;
            }
            // Rows: sum_i R[a,i] R[b,i].
            let terms = (0..3).map(|i| (rot.lift_var(vec_index(a, i), vec_index(b, i)), 1.0)).collect();
            eqs.push(LinearEquality { terms, rhs: delta });
        }
    }
    for &(a, b, c) in &CYCLIC {
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            // (R[:,a] x R[:,b])_i = R[i,c]
            eqs.push(LinearEquality {
                terms: vec![
                    (rot.r_var(i, c), 1.0),
                    (rot.lift_var(vec_index(i1, a), vec_index(i2, b)), -1.0),
                    (rot.lift_var(vec_index(i2, a), vec_index(i1, b)), 1.0),
                ],
                rhs: 0.0,
            });
        }
    }
    (block, eqs)
}

/// The 9x9 block `[[I, Y^T, Z], [Y, I, X], [Z^T, X^T, I]]`, which is PSD for rotations
/// exactly when `X = Y Z`.
pub fn multiplication_block(x: RotationRef, y: RotationRef, z: RotationRef, label: &str) -> ConeBlock {
    let mut block = ConeBlock::psd(9, format!("{label}/mult"));
    for d in 0..9 {
        block.add_constant(d, d, 1.0);
    }
    for a in 0..3 {
        for b in 0..3 {
            block.add_affine(a, 3 + b, &y.entry(b, a));
            block.add_affine(a, 6 + b, &z.entry(a, b));
            block.add_affine(3 + a, 6 + b, &x.entry(a, b));
        }
    }
    block
}

/// Cut `u . (c, s) >= h` keeping the arc of the unit circle inside the limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfSpace {
    /// Chord through the two limit endpoints, oriented towards the interval midpoint.
    /// `None` for fixed joints and intervals covering the full circle.
    pub fn for_limits(limits: &JointLimits) -> Option<Self> {
        let JointLimits::Range { lower, upper } = *limits else {
            return None;
        };
        let width = upper - lower;
        if width >= FREE_WIDTH {
            return None;
        }
        let mid = 0.5 * (lower + upper);
        Some(Self { normal: [mid.cos(), mid.sin()], offset: (0.5 * width).cos() })
    }

    pub fn slack(&self, c: f64, s: f64) -> f64 {
        self.normal[0] * c + self.normal[1] * s - self.offset
    }
}

/// Unit-disc block `[[1, c, s], [c, 1, 0], [s, 0, 1]]` and the optional half-space cut.
pub fn joint_limit_constraints(cos: usize, sin: usize, limits: &JointLimits, label: &str) -> (ConeBlock, Option<HalfSpace>) {
    let mut disc = ConeBlock::psd(3, format!("{label}/disc"));
    for d in 0..3 {
        disc.add_constant(d, d, 1.0);
    }
    disc.add_coefficient(cos, 0, 1, 1.0);
    disc.add_coefficient(sin, 0, 2, 1.0);
    (disc, HalfSpace::for_limits(limits))
}

/// Canonical rotation about `e_x` as an affine matrix in `(c, s)`:
/// `E + c C + s K` with the returned triple `(E, C, K)`.
pub fn canonical_pattern() -> (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let e = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let c = Matrix3::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    let k = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
    (e, c, k)
}

/// Equalities `r = vec(E + c C + s K)` pinning a canonical rotation to its pattern.
pub fn canonical_constraints(r_can: usize, cos: usize, sin: usize) -> Vec<LinearEquality> {
    pattern_equalities(r_can, cos, sin, &Matrix3::identity())
}

/// Equalities `R_rel = S^T R_can(c, s) S` expanded entrywise as affine functions of `(c, s)`.
pub fn conjugation_constraints(r_rel: usize, cos: usize, sin: usize, frame: &Matrix3<f64>) -> Vec<LinearEquality> {
    pattern_equalities(r_rel, cos, sin, frame)
}

fn pattern_equalities(r: usize, cos: usize, sin: usize, frame: &Matrix3<f64>) -> Vec<LinearEquality> {
    let (e, c, k) = canonical_pattern();
    let conj = |m: &Matrix3<f64>| frame.transpose() * m * frame;
    let (e, c, k) = (conj(&e), conj(&c), conj(&k));
    let mut out = Vec::with_capacity(9);
    for col in 0..3 {
        for row in 0..3 {
            let mut terms = vec![(r + vec_index(row, col), 1.0)];
            if c[(row, col)] != 0.0 {
                terms.push((cos, -c[(row, col)]));
            }
            if k[(row, col)] != 0.0 {
                terms.push((sin, -k[(row, col)]));
            }
            out.push(LinearEquality { terms, rhs: e[(row, col)] });
        }
    }
    out
}

/// Epigraph block `[[q, (y - p)^T], [y - p, I]]`, PSD exactly when `q >= |y - p|^2`.
pub fn epigraph_block(q: usize, position: usize, target: &[f64; 3], label: &str) -> ConeBlock {
    let mut block = ConeBlock::psd(4, format!("{label}/fit"));
    block.add_coefficient(q, 0, 0, 1.0);
    for a in 0..3 {
        block.add_affine(0, 1 + a, &Affine::constant(target[a]).plus(&Affine::var(position + a).scaled(-1.0)));
        block.add_constant(1 + a, 1 + a, 1.0);
    }
    block
}
