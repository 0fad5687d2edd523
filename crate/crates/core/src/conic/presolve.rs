//! Elimination of variables that appear in no cone block.
//!
//! Such variables contribute nothing to the Hessian block of the KKT matrix,
//! leaving pivots that are pure regularization. Each one is solved for from an
//! equality it appears in and substituted away; the solution and the equality
//! multipliers of the original program are recovered afterwards.

use std::collections::BTreeMap;

use crate::sdp::{ConicProgram, LinearEquality};

/// One substitution `x_var = (rhs - sum_{u != var} a_u x_u) / pivot`.
#[derive(Debug, Clone)]
struct Step {
    var: usize,
    row: usize,
    terms: BTreeMap<usize, f64>,
    rhs: f64,
    pivot: f64,
    /// Objective coefficient of `var` just before the substitution.
    cost: f64,
    /// Rows updated as `row_i -= m * row` together with their multiplier `m`.
    updates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Presolve {
    pub reduced: ConicProgram,
    /// Original index of each reduced variable.
    keep_vars: Vec<usize>,
    /// Original index of each reduced equality.
    keep_rows: Vec<usize>,
    steps: Vec<Step>,
    /// Uncovered variables that appear in no equality either; fixed at zero.
    dropped: Vec<usize>,
    /// Constant added to the objective by the substitutions.
    pub offset: f64,
    num_vars: usize,
    num_rows: usize,
}

/// Returned when an uncovered variable with a nonzero cost appears in no
/// equality, so the program is unbounded below whenever it is feasible.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Unbounded(pub usize);

impl Presolve {
    pub fn new(program: &ConicProgram) -> Result<Self, Unbounded> {
        let n = program.num_vars;
        let mut covered = vec![false; n];
        for block in &program.blocks {
            for &(i, ..) in &block.coefficients {
                covered[i] = true;
            }
        }
        let mut rows: Vec<Option<(BTreeMap<usize, f64>, f64)>> = program
            .equalities
            .iter()
            .map(|e| {
                let mut terms = BTreeMap::new();
                for &(i, v) in &e.terms {
                    *terms.entry(i).or_insert(0.0) += v;
                }
                terms.retain(|_, v| *v != 0.0);
                Some((terms, e.rhs))
            })
            .collect();
        let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &i in row.as_ref().expect("fresh row").0.keys() {
                occurs[i].push(r);
            }
        }
        let mut cost = program.objective.clone();
        let mut offset = 0.0;
        let mut steps = Vec::new();
        let mut dropped = Vec::new();

        for v in (0..n).filter(|&v| !covered[v]) {
            occurs[v].retain(|&r| rows[r].as_ref().is_some_and(|(t, _)| t.contains_key(&v)));
            let candidates = occurs[v].clone();
            if candidates.is_empty() {
                if cost[v] != 0.0 {
                    return Err(Unbounded(v));
                }
                dropped.push(v);
                continue;
            }
            let coef = |r: usize| rows[r].as_ref().expect("active row").0[&v];
            let largest = candidates.iter().map(|&r| coef(r).abs()).fold(0.0, f64::max);
            let row = *candidates
                .iter()
                .filter(|&&r| coef(r).abs() >= 0.5 * largest)
                .min_by_key(|&&r| (rows[r].as_ref().expect("active row").0.len(), r))
                .expect("nonempty candidates");
            let (terms, rhs) = rows[row].take().expect("active row");
            let pivot = terms[&v];
            let mut updates = Vec::new();
            for &r in candidates.iter().filter(|&&r| r != row) {
                let (other, other_rhs) = rows[r].as_mut().expect("active row");
                let m = other[&v] / pivot;
                for (&u, &a) in &terms {
                    if u == v {
                        other.remove(&v);
                        continue;
                    }
                    let e = other.entry(u).or_insert(0.0);
                    *e -= m * a;
                    if *e == 0.0 {
                        other.remove(&u);
                    } else if !occurs[u].contains(&r) {
                        occurs[u].push(r);
                    }
                }
                *other_rhs -= m * rhs;
                updates.push((r, m));
            }
            let cv = cost[v];
            if cv != 0.0 {
                let m = cv / pivot;
                for (&u, &a) in &terms {
                    cost[u] -= m * a;
                }
                cost[v] = 0.0;
                offset += m * rhs;
            }
            steps.push(Step { var: v, row, terms, rhs, pivot, cost: cv, updates });
        }

        let mut removed = vec![false; n];
        for s in &steps {
            removed[s.var] = true;
        }
        for &v in &dropped {
            removed[v] = true;
        }
        let keep_vars: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
        let mut new_index = vec![usize::MAX; n];
        for (k, &i) in keep_vars.iter().enumerate() {
            new_index[i] = k;
        }
        let mut reduced = ConicProgram::new(keep_vars.len());
        reduced.objective = keep_vars.iter().map(|&i| cost[i]).collect();
        let mut keep_rows = Vec::new();
        for (r, row) in rows.into_iter().enumerate() {
            let Some((terms, rhs)) = row else { continue };
            if terms.is_empty() {
                // Redundant after substitution; its multiplier stays zero.
                continue;
            }
            keep_rows.push(r);
            let terms = terms.into_iter().map(|(i, a)| (new_index[i], a)).collect();
            reduced.equalities.push(LinearEquality { terms, rhs });
        }
        for block in &program.blocks {
            let mut b = block.clone();
            for e in &mut b.coefficients {
                e.0 = new_index[e.0];
            }
            reduced.blocks.push(b);
        }
        Ok(Self {
            reduced,
            keep_vars,
            keep_rows,
            steps,
            dropped,
            offset,
            num_vars: n,
            num_rows: program.equalities.len(),
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.steps.is_empty() && self.dropped.is_empty()
    }

    /// Maps a reduced primal-dual pair back to the original program.
    pub fn recover(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut full_x = vec![0.0; self.num_vars];
        for (k, &i) in self.keep_vars.iter().enumerate() {
            full_x[i] = x[k];
        }
        for s in self.steps.iter().rev() {
            let rest: f64 = s.terms.iter().filter(|&(&u, _)| u != s.var).map(|(&u, &a)| a * full_x[u]).sum();
            full_x[s.var] = (s.rhs - rest) / s.pivot;
        }

        let mut full_y = vec![0.0; self.num_rows];
        for (k, &r) in self.keep_rows.iter().enumerate() {
            full_y[r] = y[k];
        }
        for s in &self.steps {
            full_y[s.row] = -s.cost / s.pivot;
        }
        for s in self.steps.iter().rev() {
            let shift: f64 = s.updates.iter().map(|&(r, m)| m * full_y[r]).sum();
            full_y[s.row] -= shift;
        }
        (full_x, full_y)
    }
}
