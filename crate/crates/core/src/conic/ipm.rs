//! Infeasible-start primal-dual interior-point method with Nesterov-Todd
//! scaling and Mehrotra predictor-corrector steps.
//!
//! Problem form: minimize `c.x` subject to `A x = b` and `S_k = F0_k + sum_i x_i F_ik`
//! PSD for every cone `k`. Diagonal program blocks are split into 1x1 cones.
//! Each Newton system is reduced to the quasi-definite KKT matrix
//! `[[H, A^T], [A, 0]]` with `H_ij = sum_k <F_ik, M_k F_jk M_k>`, which is
//! factored by sparse LDL^T with a pattern analysed once per solve.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use super::ldl::{factor, Factor, PivotPolicy, Symbolic};
use super::presolve::{Presolve, Unbounded};
use super::{SolveStatus, SolverOptions, SolverReport};
use crate::error::{Error, Result};
use crate::sdp::{BlockKind, ConicProgram};

const STEP: f64 = 0.99;
const STATIC_REG: f64 = 1e-8;
const REFINE_STEPS: usize = 10;

struct Cone {
    size: usize,
    f0: DMatrix<f64>,
    vars: Vec<usize>,
    /// Full symmetric `(row, col, value)` entries of each local variable's matrix.
    entries: Vec<Vec<(usize, usize, f64)>>,
    /// KKT value slots for local pairs `(a, b)`, `a <= b`, packed row-wise.
    slots: Vec<usize>,
}

impl Cone {
    fn linear(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (a, &var) in self.vars.iter().enumerate() {
            let v = x[var];
            if v != 0.0 {
                for &(r, c, w) in &self.entries[a] {
                    m[(r, c)] += w * v;
                }
            }
        }
        m
    }

    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        &self.f0 + self.linear(x)
    }

    /// `out[var] += <F_var, z>`.
    fn adjoint_add(&self, z: &DMatrix<f64>, out: &mut [f64]) {
        for (a, &var) in self.vars.iter().enumerate() {
            out[var] += self.entries[a].iter().map(|&(r, c, w)| w * z[(r, c)]).sum::<f64>();
        }
    }
}

/// Nesterov-Todd scaling `R` with `R^T Z R = R^-1 S R^-T = diag(lambda)`, and `Q = R^-1`.
#[derive(Clone)]
struct Scaling {
    r: DMatrix<f64>,
    q: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl Scaling {
    fn new(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let l1 = Cholesky::new(s.clone())?.l();
        let l2 = Cholesky::new(z.clone())?.l();
        let n = s.nrows();
        Self { r: DMatrix::identity(n, n), q: DMatrix::identity(n, n), lambda: DVector::zeros(n) }.rescaled(&l1, &l2)
    }

    // Given Cholesky factors of the scaled iterates, returns the updated scaling.
    fn rescaled(&self, l1: &DMatrix<f64>, l2: &DMatrix<f64>) -> Option<Self> {
        let svd = SVD::new(l2.transpose() * l1, true, true);
        let u = svd.u?;
        let vt = svd.v_t?;
        let sv = svd.singular_values;
        if sv.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&sv.map(|v| 1.0 / v.sqrt()));
        let r = &self.r * l1 * vt.transpose() * &inv_sqrt;
        let q = &inv_sqrt * u.transpose() * l2.transpose() * &self.q;
        Some(Self { r, q, lambda: sv })
    }

    fn s(&self) -> DMatrix<f64> {
        &self.r * DMatrix::from_diagonal(&self.lambda) * self.r.transpose()
    }

    fn z(&self) -> DMatrix<f64> {
        self.q.transpose() * DMatrix::from_diagonal(&self.lambda) * &self.q
    }

    fn m(&self) -> DMatrix<f64> {
        self.q.transpose() * &self.q
    }

    /// `Q V Q^T`.
    fn to_scaled(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * v * self.q.transpose()
    }
}

struct Kkt {
    m: usize,
    sym: Symbolic,
    /// `[A; 0]` part of the values, constant across iterations.
    base: Vec<f64>,
    /// Current unregularized values.
    values: Vec<f64>,
    diag: Vec<usize>,
    signs: Vec<f64>,
    factor: Option<Factor>,
}

impl Kkt {
    fn new(program: &ConicProgram, cones: &mut [Cone]) -> Self {
        let n = program.num_vars;
        let m = program.equalities.len();
        let mut pattern: Vec<(usize, usize)> = Vec::new();
        let mut cone_ranges = Vec::with_capacity(cones.len());
        for cone in cones.iter() {
            let start = pattern.len();
            for a in 0..cone.vars.len() {
                for b in a..cone.vars.len() {
                    pattern.push((cone.vars[a], cone.vars[b]));
                }
            }
            cone_ranges.push(start..pattern.len());
        }
        let eq_start = pattern.len();
        for (row, eq) in program.equalities.iter().enumerate() {
            for &(var, _) in &eq.terms {
                pattern.push((var, n + row));
            }
        }
        let (sym, slots) = Symbolic::analyse(n + m, &pattern);
        for (cone, range) in cones.iter_mut().zip(cone_ranges) {
            cone.slots = slots[range].to_vec();
        }
        let mut base = vec![0.0; sym.nnz()];
        let mut k = eq_start;
        for eq in &program.equalities {
            for &(_, v) in &eq.terms {
                base[slots[k]] += v;
                k += 1;
            }
        }
        let diag = sym.diagonal_slots();
        let signs = (0..n + m).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
        Self { m, values: base.clone(), base, sym, diag, signs, factor: None }
    }

    /// Assembles `H` from per-cone `M` matrices (identity when `None`) and factors.
    fn assemble_and_factor(&mut self, cones: &[Cone], ms: Option<&[DMatrix<f64>]>) {
        self.values.copy_from_slice(&self.base);
        for (k, cone) in cones.iter().enumerate() {
            let nv = cone.vars.len();
            let mut slot = 0;
            for a in 0..nv {
                // P_a = M F_a M
                let p = match ms {
                    Some(ms) => {
                        let m = &ms[k];
                        let mut p = DMatrix::<f64>::zeros(cone.size, cone.size);
                        for &(r, c, u) in &cone.entries[a] {
                            for e in 0..cone.size {
                                let mce = u * m[(c, e)];
                                if mce != 0.0 {
                                    for d in 0..cone.size {
                                        p[(d, e)] += m[(d, r)] * mce;
                                    }
                                }
                            }
                        }
                        p
                    }
                    None => {
                        let mut p = DMatrix::<f64>::zeros(cone.size, cone.size);
                        for &(r, c, u) in &cone.entries[a] {
                            p[(r, c)] += u;
                        }
                        p
                    }
                };
                for b in a..nv {
                    let h: f64 = cone.entries[b].iter().map(|&(d, e, w)| w * p[(d, e)]).sum();
                    self.values[cone.slots[slot]] += h;
                    slot += 1;
                }
            }
        }
        let max_diag = self.diag.iter().map(|&s| self.values[s].abs()).fold(0.0, f64::max);
        let eps = STATIC_REG + 4.9e-32 * max_diag;
        let mut reg = self.values.clone();
        for (i, &s) in self.diag.iter().enumerate() {
            reg[s] += self.signs[i] * eps;
        }
        let policy = PivotPolicy { threshold: 1e-13, delta: 2e-7 };
        self.factor = Some(factor(&self.sym, &reg, &self.signs, policy));
    }

    /// Solves the unregularized system with iterative refinement.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let f = self.factor.as_ref().expect("factored");
        let mut x = rhs.to_vec();
        f.solve(&self.sym, &mut x);
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut kx = vec![0.0; rhs.len()];
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_STEPS {
            self.sym.multiply(&self.values, &x, &mut kx);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
            let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if norm <= 1e-13 * (1.0 + scale) || norm >= last {
                break;
            }
            last = norm;
            f.solve(&self.sym, &mut r);
            x.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
        }
        x
    }
}

struct Problem<'a> {
    program: &'a ConicProgram,
    cones: Vec<Cone>,
    /// `(program block, diagonal position)` for each cone.
    origin: Vec<(usize, Option<usize>)>,
    nu: f64,
}

impl<'a> Problem<'a> {
    fn new(program: &'a ConicProgram) -> Self {
        let mut cones = Vec::new();
        let mut origin = Vec::new();
        for (bi, block) in program.blocks.iter().enumerate() {
            match block.kind {
                BlockKind::Psd => {
                    let mut f0 = DMatrix::zeros(block.size, block.size);
                    for &(r, c, v) in &block.constant {
                        f0[(r, c)] += v;
                        if r != c {
                            f0[(c, r)] += v;
                        }
                    }
                    let mut vars: Vec<usize> = block.coefficients.iter().map(|e| e.0).collect();
                    vars.sort_unstable();
                    vars.dedup();
                    let mut entries = vec![Vec::new(); vars.len()];
                    for &(var, r, c, v) in &block.coefficients {
                        let a = vars.binary_search(&var).expect("var present");
                        entries[a].push((r, c, v));
                        if r != c {
                            entries[a].push((c, r, v));
                        }
                    }
                    cones.push(Cone { size: block.size, f0, vars, entries, slots: Vec::new() });
                    origin.push((bi, None));
                }
                BlockKind::Diagonal => {
                    for d in 0..block.size {
                        let c0: f64 = block.constant.iter().filter(|e| e.0 == d).map(|e| e.2).sum();
                        let mut terms: Vec<(usize, f64)> =
                            block.coefficients.iter().filter(|e| e.1 == d).map(|e| (e.0, e.3)).collect();
                        terms.sort_by_key(|t| t.0);
                        let vars = terms.iter().map(|t| t.0).collect::<Vec<_>>();
                        let mut dedup_vars = vars.clone();
                        dedup_vars.dedup();
                        let entries = dedup_vars
                            .iter()
                            .map(|&v| vec![(0, 0, terms.iter().filter(|t| t.0 == v).map(|t| t.1).sum())])
                            .collect();
                        cones.push(Cone {
                            size: 1,
                            f0: DMatrix::from_element(1, 1, c0),
                            vars: dedup_vars,
                            entries,
                            slots: Vec::new(),
                        });
                        origin.push((bi, Some(d)));
                    }
                }
            }
        }
        let nu = cones.iter().map(|c| c.size as f64).sum();
        Self { program, cones, origin, nu }
    }

    fn adjoint(&self, zs: &[DMatrix<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.program.num_vars];
        for (cone, z) in self.cones.iter().zip(zs) {
            cone.adjoint_add(z, &mut out);
        }
        out
    }

    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.program.equalities.iter().map(|e| e.terms.iter().map(|&(i, v)| v * x[i]).sum()).collect()
    }

    fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.program.num_vars];
        for (e, &yv) in self.program.equalities.iter().zip(y) {
            for &(i, v) in &e.terms {
                out[i] += v * yv;
            }
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn frob(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Symmetrized product `(a b + b a) / 2`.
fn sprod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ab = a * b;
    (&ab + ab.transpose()) * 0.5
}

/// Largest step `alpha` keeping `diag(lambda) + alpha d` PSD (`inf` if unbounded).
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let scaled = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let emin = if n == 1 { scaled[(0, 0)] } else { SymmetricEigen::new(scaled).eigenvalues.min() };
    if emin < 0.0 {
        -1.0 / emin
    } else {
        f64::INFINITY
    }
}

/// Shifts a block family by `(1 + t) I` when its smallest eigenvalue `-t` is not positive.
fn shift_into_cone(ms: &mut [DMatrix<f64>]) {
    let lmin = ms
        .iter()
        .map(|m| if m.nrows() == 1 { m[(0, 0)] } else { SymmetricEigen::new(m.clone()).eigenvalues.min() })
        .fold(f64::INFINITY, f64::min);
    let t = -lmin;
    if t >= -1e-8 * frob(ms).max(1.0) {
        for m in ms.iter_mut() {
            let n = m.nrows();
            *m += DMatrix::identity(n, n) * (1.0 + t);
        }
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    scalings: Vec<Scaling>,
}

#[derive(Debug, Clone, Copy)]
struct Metrics {
    pcost: f64,
    dcost: f64,
    gap: f64,
    relgap: f64,
    pres: f64,
    dres: f64,
}

impl Metrics {
    fn merit(&self) -> f64 {
        self.pres.max(self.dres).max(self.relgap)
    }
}

pub(crate) fn solve_embedded(program: &ConicProgram, opts: &SolverOptions) -> Result<SolverReport> {
    program.validate()?;
    if program.blocks.is_empty() {
        return Err(Error::InvalidProgram("program has no cone blocks".into()));
    }
    let pre = match Presolve::new(program) {
        Ok(pre) => pre,
        Err(Unbounded(v)) => {
            return Err(Error::InvalidProgram(format!("variable {v} has a cost but is unconstrained")));
        }
    };
    if pre.is_trivial() {
        return solve_reduced(program, opts);
    }
    let mut report = solve_reduced(&pre.reduced, opts)?;
    let (x, y) = pre.recover(&report.x, &report.y);
    report.x = x;
    report.y = y;
    report.objective += pre.offset;
    report.dual_objective += pre.offset;
    Ok(report)
}

fn solve_reduced(program: &ConicProgram, opts: &SolverOptions) -> Result<SolverReport> {
    let clock = Instant::now();
    let deadline = clock + Duration::from_secs_f64(opts.time_budget.min(1e9));
    let mut problem = Problem::new(program);
    let mut cones = std::mem::take(&mut problem.cones);
    let mut kkt = Kkt::new(program, &mut cones);
    problem.cones = cones;
    let n = program.num_vars;
    let c = &program.objective;
    let b: Vec<f64> = program.equalities.iter().map(|e| e.rhs).collect();
    let f0s: Vec<DMatrix<f64>> = problem.cones.iter().map(|k| k.f0.clone()).collect();
    let rx0 = norm(c).max(1.0);
    let ry0 = norm(&b).max(1.0);
    let rz0 = frob(&f0s).max(1.0);

    // Starting point: least-squares primal and minimum-norm dual, shifted into the cone.
    kkt.assemble_and_factor(&problem.cones, None);
    let mut rhs = problem.adjoint(&f0s).iter().map(|v| -v).collect::<Vec<_>>();
    rhs.extend_from_slice(&b);
    let sol = kkt.solve(&rhs);
    let x0 = sol[..n].to_vec();
    let mut s0: Vec<DMatrix<f64>> = problem.cones.iter().map(|k| k.value(&x0)).collect();
    let mut rhs: Vec<f64> = c.iter().map(|v| -v).collect();
    rhs.extend(std::iter::repeat_n(0.0, kkt.m));
    let sol = kkt.solve(&rhs);
    let w = &sol[..n];
    let y0 = sol[n..].to_vec();
    let mut z0: Vec<DMatrix<f64>> = problem.cones.iter().map(|k| -k.linear(w)).collect();
    shift_into_cone(&mut s0);
    shift_into_cone(&mut z0);
    let scalings: Option<Vec<Scaling>> = s0.iter().zip(&z0).map(|(s, z)| Scaling::new(s, z)).collect();
    let Some(scalings) = scalings else {
        return Err(Error::Solver("could not form the initial scaling".into()));
    };
    let mut it = Iterate { x: x0, y: y0, scalings };
    let mut best: Option<(Metrics, Iterate, usize)> = None;
    let status;
    let mut message = String::new();
    let mut iterations = 0;

    loop {
        let ss: Vec<DMatrix<f64>> = it.scalings.iter().map(Scaling::s).collect();
        let zs: Vec<DMatrix<f64>> = it.scalings.iter().map(Scaling::z).collect();
        let gz = problem.adjoint(&zs);
        let aty = problem.at_mul(&it.y);
        let rx: Vec<f64> = (0..n).map(|i| c[i] + aty[i] - gz[i]).collect();
        let ax = problem.a_mul(&it.x);
        let ry: Vec<f64> = ax.iter().zip(&b).map(|(a, bb)| a - bb).collect();
        let rz: Vec<DMatrix<f64>> =
            problem.cones.iter().zip(&ss).map(|(k, s)| s - k.value(&it.x)).collect();
        let gap: f64 = it.scalings.iter().map(|s| s.lambda.norm_squared()).sum();
        let pcost = dot(c, &it.x);
        let dcost = -dot(&b, &it.y) - f0s.iter().zip(&zs).map(|(f, z)| inner(f, z)).sum::<f64>();
        let metrics = Metrics {
            pcost,
            dcost,
            gap,
            relgap: gap / pcost.abs().min(dcost.abs()).max(1.0),
            pres: (norm(&ry) / ry0).max(frob(&rz) / rz0),
            dres: norm(&rx) / rx0,
        };
        if best.as_ref().is_none_or(|b| metrics.merit() <= b.0.merit()) {
            best = Some((
                metrics,
                Iterate { x: it.x.clone(), y: it.y.clone(), scalings: it.scalings.clone() },
                iterations,
            ));
        }
        if metrics.pres <= opts.feasibility_tolerance
            && metrics.dres <= opts.feasibility_tolerance
            && metrics.relgap <= opts.gap_tolerance
        {
            status = SolveStatus::Optimal;
            break;
        }
        // Infeasibility certificates.
        let dual_ray = -dot(&b, &it.y) - f0s.iter().zip(&zs).map(|(f, z)| inner(f, z)).sum::<f64>();
        let ray_res: Vec<f64> = (0..n).map(|i| aty[i] - gz[i]).collect();
        if dual_ray > 0.0 && norm(&ray_res) / dual_ray * rx0 <= opts.feasibility_tolerance && metrics.pres > opts.feasibility_tolerance {
            status = SolveStatus::Infeasible;
            message = "primal infeasibility certificate".into();
            break;
        }
        if pcost < 0.0 {
            let lin: Vec<DMatrix<f64>> =
                problem.cones.iter().zip(&ss).map(|(k, s)| s - k.linear(&it.x)).collect();
            let res = norm(&ax).max(frob(&lin));
            if res / -pcost * ry0.max(rz0) <= opts.feasibility_tolerance && metrics.dres > opts.feasibility_tolerance {
                status = SolveStatus::Infeasible;
                message = "dual infeasibility certificate (unbounded below)".into();
                break;
            }
        }
        if iterations >= opts.max_iterations {
            message = "iteration limit".into();
            status = near_or_fail(&metrics, opts);
            break;
        }
        if Instant::now() >= deadline {
            status = SolveStatus::TimeOut;
            message = "time budget exhausted".into();
            break;
        }

        let ms: Vec<DMatrix<f64>> = it.scalings.iter().map(Scaling::m).collect();
        kkt.assemble_and_factor(&problem.cones, Some(&ms));
        let mu = gap / problem.nu;
        let bx: Vec<f64> = rx.iter().map(|v| -v).collect();
        let by: Vec<f64> = ry.iter().map(|v| -v).collect();
        let bz: Vec<DMatrix<f64>> = rz.iter().map(|m| -m).collect();
        let lam_sq: Vec<DMatrix<f64>> =
            it.scalings.iter().map(|s| DMatrix::from_diagonal(&s.lambda.map(|l| -l * l))).collect();

        let newton = |bs: &[DMatrix<f64>]| -> (Vec<f64>, Vec<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let mut us = Vec::with_capacity(bs.len());
            let mut vs = Vec::with_capacity(bs.len());
            for ((sc, bsk), bzk) in it.scalings.iter().zip(bs).zip(&bz) {
                let l = &sc.lambda;
                let u = DMatrix::from_fn(l.len(), l.len(), |i, j| 2.0 * bsk[(i, j)] / (l[i] + l[j]));
                let v = sc.q.transpose() * (&u - sc.to_scaled(bzk)) * &sc.q;
                us.push(u);
                vs.push(v);
            }
            let gv = problem.adjoint(&vs);
            let mut rhs: Vec<f64> = bx.iter().zip(&gv).map(|(a, g)| a + g).collect();
            rhs.extend_from_slice(&by);
            let sol = kkt.solve(&rhs);
            let dx = sol[..n].to_vec();
            let dy = sol[n..].to_vec();
            let mut ds = Vec::with_capacity(bs.len());
            let mut dz = Vec::with_capacity(bs.len());
            for (((cone, sc), bzk), u) in problem.cones.iter().zip(&it.scalings).zip(&bz).zip(us) {
                let mut sh = sc.to_scaled(&(bzk + cone.linear(&dx)));
                symmetrize(&mut sh);
                let zh = u - &sh;
                ds.push(sh);
                dz.push(zh);
            }
            (dx, dy, ds, dz)
        };
        let step_bound = |ds: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> f64 {
            it.scalings
                .iter()
                .zip(ds.iter().zip(dz))
                .map(|(sc, (s, z))| max_step(&sc.lambda, s).min(max_step(&sc.lambda, z)))
                .fold(f64::INFINITY, f64::min)
        };

        // Predictor.
        let (_, _, ds_a, dz_a) = newton(&lam_sq);
        let alpha_a = step_bound(&ds_a, &dz_a).min(1.0);
        let cross: f64 = ds_a.iter().zip(&dz_a).map(|(s, z)| inner(s, z)).sum();
        let sigma = (1.0 - alpha_a + alpha_a * alpha_a * cross / gap).clamp(0.0, 1.0).powi(3);
        // A degenerate predictor (NaN step bound or vanishing gap) falls back to pure centering.
        let sigma = if sigma.is_finite() { sigma } else { 1.0 };

        // Corrector.
        let bs: Vec<DMatrix<f64>> = lam_sq
            .iter()
            .zip(ds_a.iter().zip(&dz_a))
            .map(|(l2, (s, z))| {
                let n = l2.nrows();
                l2 - sprod(s, z) + DMatrix::identity(n, n) * (sigma * mu)
            })
            .collect();
        let (dx, dy, ds, dz) = newton(&bs);
        let alpha = (STEP * step_bound(&ds, &dz)).min(1.0);
        if opts.verbose {
            eprintln!(
                "{iterations:3} pcost {:+.6e} dcost {:+.6e} gap {:.1e} pres {:.1e} dres {:.1e} sigma {:.1e} alpha {:.2e} reg {}",
                metrics.pcost,
                metrics.dcost,
                metrics.gap,
                metrics.pres,
                metrics.dres,
                sigma,
                alpha,
                kkt.factor.as_ref().map_or(0, |f| f.regularized)
            );
        }
        if !(alpha > 1e-14) || dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            message = "step length collapsed".into();
            status = near_or_fail(&metrics, opts);
            break;
        }

        let mut next = Vec::with_capacity(it.scalings.len());
        for (sc, (s, z)) in it.scalings.iter().zip(ds.iter().zip(&dz)) {
            let lam = DMatrix::from_diagonal(&sc.lambda);
            let mut st = &lam + s * alpha;
            let mut zt = &lam + z * alpha;
            symmetrize(&mut st);
            symmetrize(&mut zt);
            match (Cholesky::new(st), Cholesky::new(zt)) {
                (Some(l1), Some(l2)) => match sc.rescaled(&l1.l(), &l2.l()) {
                    Some(s) => next.push(s),
                    None => break,
                },
                _ => break,
            }
        }
        if next.len() != it.scalings.len() {
            message = "scaling update failed".into();
            status = near_or_fail(&metrics, opts);
            break;
        }
        it.x.iter_mut().zip(&dx).for_each(|(a, d)| *a += alpha * d);
        it.y.iter_mut().zip(&dy).for_each(|(a, d)| *a += alpha * d);
        it.scalings = next;
        iterations += 1;
    }

    // Report the final iterate when it converged, otherwise the best one seen,
    // classified by its own residuals.
    let (it, status) = match status {
        SolveStatus::Optimal | SolveStatus::Infeasible => (it, status),
        SolveStatus::TimeOut => (best.expect("at least one iterate").1, status),
        _ => {
            let (m, b, _) = best.expect("at least one iterate");
            (b, near_or_fail(&m, opts))
        }
    };
    Ok(report(&problem, &it, status, message, iterations, clock.elapsed().as_secs_f64(), &b, rx0, ry0, rz0))
}

fn near_or_fail(m: &Metrics, opts: &SolverOptions) -> SolveStatus {
    if m.pres <= 1e3 * opts.feasibility_tolerance && m.dres <= 1e3 * opts.feasibility_tolerance && m.relgap <= 1e3 * opts.gap_tolerance {
        SolveStatus::NearOptimal
    } else {
        SolveStatus::NumericalFailure
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    problem: &Problem,
    it: &Iterate,
    status: SolveStatus,
    message: String,
    iterations: usize,
    wall_time: f64,
    b: &[f64],
    rx0: f64,
    ry0: f64,
    rz0: f64,
) -> SolverReport {
    let program = problem.program;
    let n = program.num_vars;
    let zs: Vec<DMatrix<f64>> = it.scalings.iter().map(Scaling::z).collect();
    let ss: Vec<DMatrix<f64>> = it.scalings.iter().map(Scaling::s).collect();
    let mut blocks: Vec<DMatrix<f64>> = program.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
    let mut dual_blocks = blocks.clone();
    for (k, &(bi, d)) in problem.origin.iter().enumerate() {
        let value = problem.cones[k].value(&it.x);
        match d {
            None => {
                blocks[bi] = value;
                dual_blocks[bi] = zs[k].clone();
            }
            Some(d) => {
                blocks[bi][(d, d)] = value[(0, 0)];
                dual_blocks[bi][(d, d)] = zs[k][(0, 0)];
            }
        }
    }
    let gz = problem.adjoint(&zs);
    let aty = problem.at_mul(&it.y);
    let rx: Vec<f64> = (0..n).map(|i| program.objective[i] + aty[i] - gz[i]).collect();
    let ry: Vec<f64> = problem.a_mul(&it.x).iter().zip(b).map(|(a, bb)| a - bb).collect();
    let rz: Vec<DMatrix<f64>> = problem.cones.iter().zip(&ss).map(|(k, s)| s - k.value(&it.x)).collect();
    let gap: f64 = it.scalings.iter().map(|s| s.lambda.norm_squared()).sum();
    let objective = dot(&program.objective, &it.x);
    let dual_objective = -dot(b, &it.y) - problem.cones.iter().zip(&zs).map(|(k, z)| inner(&k.f0, z)).sum::<f64>();
    SolverReport {
        status,
        message,
        x: it.x.clone(),
        y: it.y.clone(),
        blocks,
        dual_blocks,
        objective,
        dual_objective,
        gap,
        relative_gap: gap / objective.abs().min(dual_objective.abs()).max(1.0),
        primal_residual: (norm(&ry) / ry0).max(frob(&rz) / rz0),
        dual_residual: norm(&rx) / rx0,
        iterations,
        wall_time,
    }
}
