//! SDPA sparse format (`.dat-s`).
//!
//! A program maps to the SDPA dual form `sum_i F_i x_i - F_0 PSD`: our
//! coefficient matrices become `F_1..F_m` and our constant block becomes
//! `-F_0`. Equalities are written as a trailing diagonal block holding the pair
//! `a.x - b >= 0`, `b - a.x >= 0` per equation; a comment line marks that block
//! so reading restores the equalities. Further comment lines carry block labels.
//!
//! Entry order: `matno` (0 first), then block, row, column; values use the
//! shortest exponent form that round-trips.

use std::fmt::Write as _;
use std::path::Path;

use crate::sdp::{BlockKind, ConeBlock, ConicProgram, LinearEquality};
use crate::error::{Error, Result};

const EQUALITY_MARKER: &str = "sdpik equality-block";
const LABEL_MARKER: &str = "sdpik block";

pub fn sdpa_to_string(program: &ConicProgram) -> String {
    let mut p = program.clone();
    p.canonicalize();
    let m = p.num_vars;
    let neq = p.equalities.len();
    let nblocks = p.blocks.len() + usize::from(neq > 0);
    let mut out = String::new();
    out.push_str("* SDPA sparse format written by sdpik\n");
    for (k, b) in p.blocks.iter().enumerate() {
        let _ = writeln!(out, "* {LABEL_MARKER} {} {}", k + 1, b.label);
    }
    if neq > 0 {
        let _ = writeln!(out, "* {EQUALITY_MARKER} {} {}", nblocks, neq);
    }
    let _ = writeln!(out, "{m}");
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = p
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => b.size.to_string(),
            BlockKind::Diagonal => format!("-{}", b.size),
        })
        .collect();
    if neq > 0 {
        sizes.push(format!("-{}", 2 * neq));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = p.objective.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    // (matno, block, row, col, value), 1-based.
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (k, b) in p.blocks.iter().enumerate() {
        for &(r, c, v) in &b.constant {
            entries.push((0, k + 1, r + 1, c + 1, -v));
        }
        for &(var, r, c, v) in &b.coefficients {
            entries.push((var + 1, k + 1, r + 1, c + 1, v));
        }
    }
    if neq > 0 {
        for (row, eq) in p.equalities.iter().enumerate() {
            let (d1, d2) = (2 * row + 1, 2 * row + 2);
            if eq.rhs != 0.0 {
                entries.push((0, nblocks, d1, d1, eq.rhs));
                entries.push((0, nblocks, d2, d2, -eq.rhs));
            }
            for &(var, v) in &eq.terms {
                entries.push((var + 1, nblocks, d1, d1, v));
                entries.push((var + 1, nblocks, d2, d2, -v));
            }
        }
    }
    entries.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (mat, blk, r, c, v) in entries {
        let _ = writeln!(out, "{mat} {blk} {r} {c} {v:e}");
    }
    out
}

pub fn write_sdpa(program: &ConicProgram, path: &Path) -> Result<()> {
    std::fs::write(path, sdpa_to_string(program)).map_err(|e| Error::io(path, e))
}

pub fn read_sdpa(path: &Path) -> Result<ConicProgram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    sdpa_from_str(&text, &path.display().to_string())
}

fn numbers_in(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')')).filter(|t| !t.is_empty())
}

/// Parses SDPA sparse text; `source` names the input in error messages.
pub fn sdpa_from_str(text: &str, source: &str) -> Result<ConicProgram> {
    let err = |line: usize, message: String| Error::Parse { path: source.to_string(), line, message };
    let mut labels: Vec<(usize, String)> = Vec::new();
    let mut eq_block: Option<(usize, usize)> = None;
    let mut data: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('*').or_else(|| line.strip_prefix('"')) {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix(EQUALITY_MARKER) {
                let nums: Vec<usize> = rest.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                if nums.len() != 2 {
                    return Err(err(i + 1, "malformed equality-block marker".into()));
                }
                eq_block = Some((nums[0], nums[1]));
            } else if let Some(rest) = comment.strip_prefix(LABEL_MARKER) {
                let rest = rest.trim_start();
                let (num, label) = rest.split_once(' ').unwrap_or((rest, ""));
                let k: usize = num.parse().map_err(|_| err(i + 1, "malformed block label".into()))?;
                labels.push((k, label.to_string()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        data.push((i + 1, line));
    }
    let mut lines = data.into_iter();
    let mut next_line = |what: &str| lines.next().ok_or_else(|| err(text.lines().count(), format!("missing {what}")));

    let (ln, line) = next_line("variable count")?;
    let m: usize = numbers_in(line)
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(ln, "expected the number of variables".into()))?;
    let (ln, line) = next_line("block count")?;
    let nblocks: usize = numbers_in(line)
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(ln, "expected the number of blocks".into()))?;
    let (ln, line) = next_line("block structure")?;
    let sizes: Vec<i64> = numbers_in(line)
        .take(nblocks)
        .map(|t| t.parse::<i64>().map_err(|_| err(ln, format!("bad block size `{t}`"))))
        .collect::<Result<_>>()?;
    if sizes.len() != nblocks || sizes.contains(&0) {
        return Err(err(ln, format!("expected {nblocks} non-zero block sizes")));
    }

    let mut objective = Vec::with_capacity(m);
    while objective.len() < m {
        let (ln, line) = next_line("objective vector")?;
        for t in numbers_in(line) {
            if objective.len() == m {
                break;
            }
            objective.push(t.parse::<f64>().map_err(|_| err(ln, format!("bad objective value `{t}`")))?);
        }
    }

    let mut blocks: Vec<ConeBlock> = sizes
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let label = labels.iter().find(|l| l.0 == k + 1).map(|l| l.1.clone()).unwrap_or_else(|| format!("block{}", k + 1));
            if s > 0 {
                ConeBlock::psd(s as usize, label)
            } else {
                ConeBlock::diagonal((-s) as usize, label)
            }
        })
        .collect();
    for (ln, line) in lines {
        let toks: Vec<&str> = numbers_in(line).collect();
        if toks.len() < 5 {
            return Err(err(ln, "expected `matno blkno i j value`".into()));
        }
        let idx = |t: &str, what: &str| t.parse::<usize>().map_err(|_| err(ln, format!("bad {what} `{t}`")));
        let mat = idx(toks[0], "matrix number")?;
        let blk = idx(toks[1], "block number")?;
        let i = idx(toks[2], "row")?;
        let j = idx(toks[3], "column")?;
        let v: f64 = toks[4].parse().map_err(|_| err(ln, format!("bad value `{}`", toks[4])))?;
        if mat > m || blk == 0 || blk > nblocks {
            return Err(err(ln, format!("matrix {mat} / block {blk} out of range")));
        }
        let b = &mut blocks[blk - 1];
        if i == 0 || j == 0 || i > b.size || j > b.size || (b.kind == BlockKind::Diagonal && i != j) {
            return Err(err(ln, format!("entry ({i}, {j}) outside block {blk}")));
        }
        if mat == 0 {
            b.add_constant(i - 1, j - 1, -v);
        } else {
            b.add_coefficient(mat - 1, i - 1, j - 1, v);
        }
    }

    let mut program = ConicProgram { num_vars: m, objective, equalities: Vec::new(), blocks };
    if let Some((blk, neq)) = eq_block {
        if blk != program.blocks.len() || program.blocks[blk - 1].kind != BlockKind::Diagonal || program.blocks[blk - 1].size != 2 * neq {
            return Err(err(1, "equality-block marker does not match the block structure".into()));
        }
        let b = program.blocks.pop().expect("checked above");
        let mut eqs: Vec<LinearEquality> = (0..neq).map(|_| LinearEquality { terms: Vec::new(), rhs: 0.0 }).collect();
        // Constant entries hold -b after negation on read; take the first row of each pair.
        for &(r, _, v) in &b.constant {
            if r % 2 == 0 {
                eqs[r / 2].rhs = -v;
            }
        }
        for &(var, r, _, v) in &b.coefficients {
            if r % 2 == 0 {
                eqs[r / 2].terms.push((var, v));
            }
        }
        program.equalities = eqs;
    }
    program.canonicalize();
    program.validate()?;
    Ok(program)
}
