//! Sparse LDL^T factorization for quasi-definite matrices with a fixed pattern.
//!
//! The pattern is analysed once (minimum-degree ordering, elimination tree,
//! column counts); numeric factorizations then reuse it. Pivots carry a known
//! sign (positive for the primal block, negative for the equality block) and
//! are regularized when they come out too small or with the wrong sign.

const NONE: usize = usize::MAX;

/// Symbolic analysis of a symmetric pattern given as upper-triangle coordinates.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    /// Upper-triangular CSC pattern of the permuted matrix.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    etree: Vec<usize>,
    l_col_ptr: Vec<usize>,
}

impl Symbolic {
    /// Analyses the pattern; `entries` are `(row, col)` pairs in original
    /// numbering (either triangle, duplicates allowed). Diagonal entries are
    /// always included. Returns the analysis and, for each input entry, its
    /// position in the permuted value array.
    pub fn analyse(n: usize, entries: &[(usize, usize)]) -> (Self, Vec<usize>) {
        let perm = minimum_degree(n, entries);
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        // Permuted upper-triangle coordinates, diagonal first added for each column.
        let permuted: Vec<(usize, usize)> = entries
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (iperm[i], iperm[j]);
                if a <= b { (a, b) } else { (b, a) }
            })
            .collect();
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for &(a, b) in &permuted {
            cols[b].push(a);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in &mut cols {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        let slots = permuted
            .iter()
            .map(|&(a, b)| col_ptr[b] + cols[b].binary_search(&a).expect("entry in pattern"))
            .collect();

        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &row_idx[col_ptr[j]..col_ptr[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut l_col_ptr = Vec::with_capacity(n + 1);
        l_col_ptr.push(0);
        for i in 0..n {
            l_col_ptr.push(l_col_ptr[i] + lnz[i]);
        }
        (Self { n, perm, col_ptr, row_idx, etree, l_col_ptr }, slots)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored values of the permuted upper triangle.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Position of the diagonal entry of original index `i` in the value array.
    pub fn diagonal_slot(&self, i: usize) -> usize {
        let k = self.perm.iter().position(|&p| p == i).expect("index in range");
        self.col_ptr[k]
    }

    /// Diagonal slots for every original index.
    pub fn diagonal_slots(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = self.col_ptr[k];
        }
        out
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }

    /// Symmetric product `y = K x` using the permuted upper-triangle values.
    pub fn multiply(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            let pj = self.perm[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let pi = self.perm[self.row_idx[p]];
                let v = values[p];
                y[pi] += v * x[pj];
                if pi != pj {
                    y[pj] += v * x[pi];
                }
            }
        }
    }
}

/// Numeric factor `P K P^T = L D L^T`.
#[derive(Debug, Clone)]
pub struct Factor {
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    d_inv: Vec<f64>,
    /// Number of pivots replaced by the dynamic regularization.
    pub regularized: usize,
}

/// Pivot control for [`factor`].
#[derive(Debug, Clone, Copy)]
pub struct PivotPolicy {
    /// Pivots with `sign * d <= threshold` are replaced by `sign * delta`.
    pub threshold: f64,
    pub delta: f64,
}

/// Factors the matrix with values in the analysed pattern; `signs[i]` is the
/// expected pivot sign of original index `i`.
pub fn factor(sym: &Symbolic, values: &[f64], signs: &[f64], policy: PivotPolicy) -> Factor {
    let n = sym.n;
    let lp = &sym.l_col_ptr;
    let mut l_row = vec![0usize; lp[n]];
    let mut l_val = vec![0.0; lp[n]];
    let mut d = vec![0.0; n];
    let mut d_inv = vec![0.0; n];
    let mut next = lp[..n].to_vec();
    let mut y_vals = vec![0.0; n];
    let mut y_mark = vec![false; n];
    let mut y_idx = Vec::with_capacity(n);
    let mut buffer = Vec::with_capacity(n);
    let mut regularized = 0;

    for k in 0..n {
        y_idx.clear();
        for p in sym.col_ptr[k]..sym.col_ptr[k + 1] {
            let b = sym.row_idx[p];
            if b == k {
                d[k] = values[p];
                continue;
            }
            y_vals[b] = values[p];
            if !y_mark[b] {
                y_mark[b] = true;
                buffer.clear();
                buffer.push(b);
                let mut i = sym.etree[b];
                while i != NONE && i < k && !y_mark[i] {
                    y_mark[i] = true;
                    buffer.push(i);
                    i = sym.etree[i];
                }
                while let Some(v) = buffer.pop() {
                    y_idx.push(v);
                }
            }
        }
        for &c in y_idx.iter().rev() {
            let yc = y_vals[c];
            let end = next[c];
            for p in lp[c]..end {
                y_vals[l_row[p]] -= l_val[p] * yc;
            }
            l_row[end] = k;
            let lv = yc * d_inv[c];
            l_val[end] = lv;
            d[k] -= yc * lv;
            next[c] += 1;
            y_vals[c] = 0.0;
            y_mark[c] = false;
        }
        let sign = signs[sym.perm[k]];
        if !(sign * d[k] > policy.threshold) {
            d[k] = sign * policy.delta;
            regularized += 1;
        }
        d_inv[k] = 1.0 / d[k];
    }
    Factor { l_row, l_val, d_inv, regularized }
}

impl Factor {
    /// Solves `K x = b` in place (original numbering).
    pub fn solve(&self, sym: &Symbolic, b: &mut [f64]) {
        let n = sym.n;
        let lp = &sym.l_col_ptr;
        let mut x: Vec<f64> = sym.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            for p in lp[i]..lp[i + 1] {
                x[self.l_row[p]] -= self.l_val[p] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.d_inv[i];
        }
        for i in (0..n).rev() {
            let mut xi = x[i];
            for p in lp[i]..lp[i + 1] {
                xi -= self.l_val[p] * x[self.l_row[p]];
            }
            x[i] = xi;
        }
        for (k, &p) in sym.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}

/// Minimum-degree elimination order on the explicit elimination graph.
/// Ties go to the lowest index, so the order is deterministic.
pub fn minimum_degree(n: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let words = n.div_ceil(64);
    let mut adj = vec![0u64; n * words];
    let set = |adj: &mut [u64], i: usize, j: usize| adj[i * words + j / 64] |= 1 << (j % 64);
    for &(i, j) in entries {
        if i != j {
            set(&mut adj, i, j);
            set(&mut adj, j, i);
        }
    }
    let mut alive = vec![u64::MAX; words];
    if n % 64 != 0 {
        alive[words - 1] = (1u64 << (n % 64)) - 1;
    }
    let popcount = |row: &[u64]| row.iter().map(|w| w.count_ones() as usize).sum::<usize>();
    let mut degree: Vec<usize> = (0..n).map(|i| popcount(&adj[i * words..(i + 1) * words])).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nbrs = Vec::new();
    let mut row_v = vec![0u64; words];
    for _ in 0..n {
        let v = (0..n).filter(|&i| !eliminated[i]).min_by_key(|&i| (degree[i], i)).expect("vertex left");
        eliminated[v] = true;
        order.push(v);
        alive[v / 64] &= !(1 << (v % 64));
        for w in 0..words {
            row_v[w] = adj[v * words + w] & alive[w];
        }
        nbrs.clear();
        for (w, &bits) in row_v.iter().enumerate() {
            let mut b = bits;
            while b != 0 {
                let t = b.trailing_zeros() as usize;
                nbrs.push(w * 64 + t);
                b &= b - 1;
            }
        }
        for &u in &nbrs {
            let row = &mut adj[u * words..(u + 1) * words];
            for w in 0..words {
                row[w] = (row[w] | row_v[w]) & alive[w];
            }
            row[u / 64] &= !(1 << (u % 64));
            degree[u] = popcount(row);
        }
    }
    order
}
