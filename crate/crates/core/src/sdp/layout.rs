use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::program::Affine;

/// Index of `R[row, col]` inside a column-major `vec(R)`.
pub const fn vec_index(row: usize, col: usize) -> usize {
    3 * col + row
}

/// Position of entry `(a, b)` of a symmetric 9x9 lifted matrix in its packed upper triangle.
pub const fn lift_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    9 * a - a * a.saturating_sub(1) / 2 + (b - a)
}

/// Number of packed entries of a symmetric 9x9 matrix.
pub const LIFT_LEN: usize = 45;

/// A rotation matrix in the program: either the constant identity or nine variables
/// holding `vec(R)` column-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationRef {
    Identity,
    Vars(usize),
}

impl RotationRef {
    pub fn entry(&self, row: usize, col: usize) -> Affine {
        match *self {
            RotationRef::Identity => Affine::constant(if row == col { 1.0 } else { 0.0 }),
            RotationRef::Vars(start) => Affine::var(start + vec_index(row, col)),
        }
    }

    pub fn range(&self) -> Option<Range<usize>> {
        match *self {
            RotationRef::Identity => None,
            RotationRef::Vars(start) => Some(start..start + 9),
        }
    }
}

/// A rotation vector `r` (nine variables) together with its packed lift `𝐑`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedRotation {
    pub r: Range<usize>,
    pub lift: Range<usize>,
}

impl LiftedRotation {
    pub fn r_var(&self, row: usize, col: usize) -> usize {
        self.r.start + vec_index(row, col)
    }

    /// Variable of the lifted entry `𝐑[a, b]`, with `a` and `b` indexing `vec(R)`.
    pub fn lift_var(&self, a: usize, b: usize) -> usize {
        self.lift.start + lift_index(a, b)
    }

    pub fn rotation(&self) -> RotationRef {
        RotationRef::Vars(self.r.start)
    }
}

/// Variables owned by a revolute joint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevoluteVars {
    pub global: LiftedRotation,
    pub relative: LiftedRotation,
    pub canonical: LiftedRotation,
    pub cos: usize,
    pub sin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointVars {
    pub position: Range<usize>,
    /// Global rotation; fixed joints share their parent's.
    pub rotation: RotationRef,
    pub revolute: Option<RevoluteVars>,
}

/// Map from the symbols of the relaxation to scalar variable indices.
///
/// Variables are laid out as the root translation, then per joint its position,
/// rotation vectors, canonical scalars and lifts, then one epigraph scalar per
/// observed joint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub num_vars: usize,
    pub translation: Range<usize>,
    pub joints: Vec<JointVars>,
    /// `(joint index, variable)` per observed joint in observation order.
    pub epigraph: Vec<(usize, usize)>,
}

impl VariableLayout {
    pub fn joint(&self, index: usize) -> &JointVars {
        &self.joints[index]
    }

    /// Every named range, in increasing order.
    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut out = vec![self.translation.clone()];
        for j in &self.joints {
            out.push(j.position.clone());
            if let Some(rv) = &j.revolute {
                out.push(rv.global.r.clone());
                out.push(rv.relative.r.clone());
                out.push(rv.canonical.r.clone());
                out.push(rv.cos..rv.cos + 1);
                out.push(rv.sin..rv.sin + 1);
                out.push(rv.global.lift.clone());
                out.push(rv.relative.lift.clone());
                out.push(rv.canonical.lift.clone());
            }
        }
        out.extend(self.epigraph.iter().map(|&(_, v)| v..v + 1));
        out.sort_by_key(|r| r.start);
        out
    }
}

#[derive(Debug, Default)]
pub(crate) struct Allocator {
    next: usize,
}

impl Allocator {
    pub(crate) fn take(&mut self, n: usize) -> Range<usize> {
        let r = self.next..self.next + n;
        self.next += n;
        r
    }

    pub(crate) fn one(&mut self) -> usize {
        self.take(1).start
    }

    pub(crate) fn total(&self) -> usize {
        self.next
    }
}
