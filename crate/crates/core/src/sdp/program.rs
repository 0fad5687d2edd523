use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cone of a block: a full symmetric PSD block or a diagonal (nonnegative orthant) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Psd,
    Diagonal,
}

/// One block `F0 + sum_i x_i F_i` of the block-diagonal cone constraint.
///
/// Entries are stored for the upper triangle only (`row <= col`); diagonal
/// blocks only carry `row == col` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub label: String,
    pub kind: BlockKind,
    pub size: usize,
    /// `(row, col, value)` entries of `F0`.
    pub constant: Vec<(usize, usize, f64)>,
    /// `(var, row, col, value)` entries of the `F_i`.
    pub coefficients: Vec<(usize, usize, usize, f64)>,
}

impl ConeBlock {
    pub fn psd(size: usize, label: impl Into<String>) -> Self {
        Self { label: label.into(), kind: BlockKind::Psd, size, constant: Vec::new(), coefficients: Vec::new() }
    }

    pub fn diagonal(size: usize, label: impl Into<String>) -> Self {
        Self { label: label.into(), kind: BlockKind::Diagonal, size, constant: Vec::new(), coefficients: Vec::new() }
    }

    pub fn add_constant(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            let (r, c) = if row <= col { (row, col) } else { (col, row) };
            self.constant.push((r, c, value));
        }
    }

    pub fn add_coefficient(&mut self, var: usize, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            let (r, c) = if row <= col { (row, col) } else { (col, row) };
            self.coefficients.push((var, r, c, value));
        }
    }

    /// Adds an affine entry at `(row, col)`.
    pub fn add_affine(&mut self, row: usize, col: usize, expr: &Affine) {
        self.add_constant(row, col, expr.constant);
        for &(var, v) in &expr.terms {
            self.add_coefficient(var, row, col, v);
        }
    }

    /// Dense symmetric value at `x`.
    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(r, c, v) in &self.constant {
            m[(r, c)] += v;
        }
        for &(var, r, c, v) in &self.coefficients {
            m[(r, c)] += v * x[var];
        }
        for c in 0..self.size {
            for r in 0..c {
                m[(c, r)] = m[(r, c)];
            }
        }
        m
    }

    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        let m = self.value(x);
        match self.kind {
            BlockKind::Diagonal => m.diagonal().min(),
            BlockKind::Psd => SymmetricEigen::new(m).eigenvalues.min(),
        }
    }

    // Sorts entries and merges duplicates so equal blocks compare equal.
    fn canonicalize(&mut self) {
        self.constant.sort_by_key(|a| (a.0, a.1));
        self.constant.dedup_by(|b, a| {
            if (a.0, a.1) == (b.0, b.1) {
                a.2 += b.2;
                true
            } else {
                false
            }
        });
        self.constant.retain(|e| e.2 != 0.0);
        self.coefficients.sort_by_key(|a| (a.0, a.1, a.2));
        self.coefficients.dedup_by(|b, a| {
            if (a.0, a.1, a.2) == (b.0, b.1, b.2) {
                a.3 += b.3;
                true
            } else {
                false
            }
        });
        self.coefficients.retain(|e| e.3 != 0.0);
    }
}

/// Affine expression `constant + sum terms`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    pub fn var(index: usize) -> Self {
        Self { constant: 0.0, terms: vec![(index, 1.0)] }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self
    }

    pub fn plus(mut self, other: &Affine) -> Self {
        self.constant += other.constant;
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>()
    }
}

/// Linear equation `sum terms = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearEquality {
    /// `expr = 0`, moving the constant to the right-hand side.
    pub fn zero(expr: Affine) -> Self {
        Self { terms: expr.terms, rhs: -expr.constant }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>() - self.rhs
    }
}

/// Standard-form conic program over free scalar variables:
/// minimize `c.x` subject to `A x = b` and every block `F0 + sum x_i F_i` in its cone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub equalities: Vec<LinearEquality>,
    pub blocks: Vec<ConeBlock>,
}

/// Block counts keyed by cone kind and size.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockCensus(pub BTreeMap<(BlockKind, usize), usize>);

impl BlockCensus {
    pub fn count(&self, kind: BlockKind, size: usize) -> usize {
        self.0.get(&(kind, size)).copied().unwrap_or(0)
    }

    pub fn psd_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().filter(|k| k.0 == BlockKind::Psd).map(|k| k.1)
    }
}

impl fmt::Display for BlockCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|((kind, size), n)| match kind {
                BlockKind::Psd => format!("{n}x psd {size}"),
                BlockKind::Diagonal => format!("{n}x diag {size}"),
            })
            .collect();
        f.write_str(&parts.join(", "))
    }
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], equalities: Vec::new(), blocks: Vec::new() }
    }

    pub fn add_equality(&mut self, eq: LinearEquality) {
        self.equalities.push(eq);
    }

    pub fn add_block(&mut self, block: ConeBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn max_equality_residual(&self, x: &[f64]) -> f64 {
        self.equalities.iter().map(|e| e.residual(x).abs()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks (`+inf` without blocks).
    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| b.min_eigenvalue(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn census(&self) -> BlockCensus {
        let mut map = BTreeMap::new();
        for b in &self.blocks {
            *map.entry((b.kind, b.size)).or_insert(0) += 1;
        }
        BlockCensus(map)
    }

    /// Sorts and merges entries in place.
    pub fn canonicalize(&mut self) {
        for b in &mut self.blocks {
            b.canonicalize();
        }
        for e in &mut self.equalities {
            e.terms.sort_by_key(|t| t.0);
            e.terms.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            e.terms.retain(|t| t.1 != 0.0);
        }
    }

    /// Checks index ranges, triangle storage, diagonal-block shape and finiteness.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProgram(msg));
        if self.objective.len() != self.num_vars {
            return bad(format!("objective has {} entries for {} variables", self.objective.len(), self.num_vars));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return bad("non-finite objective coefficient".into());
        }
        for (k, e) in self.equalities.iter().enumerate() {
            if !e.rhs.is_finite() || e.terms.iter().any(|&(i, v)| i >= self.num_vars || !v.is_finite()) {
                return bad(format!("equality {k} references an invalid variable or value"));
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.size == 0 {
                return bad(format!("block {k} is empty"));
            }
            let shape_ok = |r: usize, c: usize| r <= c && c < b.size && (b.kind == BlockKind::Psd || r == c);
            if b.constant.iter().any(|&(r, c, v)| !shape_ok(r, c) || !v.is_finite()) {
                return bad(format!("block {k} ({}) has a malformed constant entry", b.label));
            }
            if b.coefficients.iter().any(|&(i, r, c, v)| i >= self.num_vars || !shape_ok(r, c) || !v.is_finite()) {
                return bad(format!("block {k} ({}) has a malformed coefficient entry", b.label));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_value_is_symmetric() {
        let mut b = ConeBlock::psd(3, "b");
        b.add_constant(0, 0, 1.0);
        b.add_coefficient(0, 2, 1, 2.0);
        b.add_coefficient(1, 0, 2, -1.0);
        let m = b.value(&[0.5, 3.0]);
        assert_eq!(m, m.transpose());
        assert_eq!(m[(1, 2)], 1.0);
        assert_eq!(m[(2, 0)], -3.0);
    }

    #[test]
    fn canonical_form_merges_duplicates() {
        let mut p = ConicProgram::new(2);
        let mut b = ConeBlock::diagonal(2, "d");
        b.add_coefficient(1, 1, 1, 1.0);
        b.add_coefficient(0, 0, 0, 1.0);
        b.add_coefficient(1, 1, 1, 1.0);
        p.add_block(b);
        p.add_equality(LinearEquality { terms: vec![(1, 1.0), (0, 2.0), (1, -1.0)], rhs: 1.0 });
        p.canonicalize();
        assert_eq!(p.blocks[0].coefficients, vec![(0, 0, 0, 1.0), (1, 1, 1, 2.0)]);
        assert_eq!(p.equalities[0].terms, vec![(0, 2.0)]);
        p.validate().unwrap();
        assert_eq!(p.census().count(BlockKind::Diagonal, 2), 1);
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = ConicProgram::new(1);
        let mut b = ConeBlock::diagonal(2, "d");
        b.coefficients.push((0, 0, 1, 1.0));
        p.add_block(b);
        assert!(p.validate().is_err());
        let mut p = ConicProgram::new(1);
        p.add_equality(LinearEquality { terms: vec![(3, 1.0)], rhs: 0.0 });
        assert!(p.validate().is_err());
    }
}
