//! Bridge to external SDP solvers through SDPA files.
//!
//! The configured command template is split on whitespace; `{input}` and
//! `{output}` are replaced by the problem and solution paths. Solutions are
//! read in SDPA output format (`objValPrimal`, `xVec`, `phase.value`) or, if
//! no `xVec` is present, CSDP format (first line holds the `x` vector).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sdpa::write_sdpa;
use super::{SolveStatus, SolverOptions, SolverReport};
use crate::error::{Error, Result};
use crate::sdp::ConicProgram;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSolver {
    pub command: String,
    /// Keep the exchanged files instead of deleting them.
    pub keep_files: bool,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), keep_files: false }
    }
}

static COUNTER: AtomicUsize = AtomicUsize::new(0);

fn scratch_paths() -> (PathBuf, PathBuf) {
    let id = COUNTER.fetch_add(1, Ordering::Relaxed);
    let stem = format!("sdpik-{}-{}", std::process::id(), id);
    let dir = std::env::temp_dir();
    (dir.join(format!("{stem}.dat-s")), dir.join(format!("{stem}.out")))
}

pub fn solve_external(program: &ConicProgram, _opts: &SolverOptions, ext: &ExternalSolver) -> Result<SolverReport> {
    program.validate()?;
    let clock = Instant::now();
    let (input, output) = scratch_paths();
    write_sdpa(program, &input)?;
    let result = run(program, ext, &input, &output);
    if !ext.keep_files {
        let _ = std::fs::remove_file(&input);
        let _ = std::fs::remove_file(&output);
    }
    let (status, x, code_message) = result?;
    Ok(report_from_x(program, status, x, code_message, clock.elapsed().as_secs_f64()))
}

fn run(program: &ConicProgram, ext: &ExternalSolver, input: &Path, output: &Path) -> Result<(SolveStatus, Vec<f64>, String)> {
    let mut parts = ext.command.split_whitespace().map(|t| {
        t.replace("{input}", &input.display().to_string()).replace("{output}", &output.display().to_string())
    });
    let program_name = parts.next().ok_or_else(|| Error::Config("empty solver command".into()))?;
    let out = Command::new(&program_name)
        .args(parts)
        .output()
        .map_err(|e| Error::Solver(format!("failed to launch `{program_name}`: {e}")))?;
    let text = std::fs::read_to_string(output).unwrap_or_default();
    let stdout = String::from_utf8_lossy(&out.stdout);
    // Some solvers only print their result.
    let text = if text.trim().is_empty() { stdout.to_string() } else { text };
    let (status, x) = parse_solution(&text, program.num_vars, out.status.code())
        .map_err(|e| Error::Solver(format!("`{program_name}` produced no usable solution: {e}")))?;
    Ok((status, x, format!("external solver exit code {:?}", out.status.code())))
}

/// Parses an SDPA or CSDP solution text into a status and the `x` vector.
pub fn parse_solution(text: &str, m: usize, exit_code: Option<i32>) -> std::result::Result<(SolveStatus, Vec<f64>), String> {
    let numbers = |s: &str| -> Vec<f64> {
        s.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}'))
            .filter(|t| !t.is_empty())
            .filter_map(|t| t.parse().ok())
            .collect()
    };
    if let Some(pos) = text.find("xVec") {
        let rest = &text[pos + 4..];
        let rest = rest.trim_start_matches(|c: char| c == '=' || c.is_whitespace());
        let end = rest.find('}').map(|e| e + 1).unwrap_or(rest.len());
        let x = numbers(&rest[..end]);
        if x.len() != m {
            return Err(format!("xVec has {} entries, expected {m}", x.len()));
        }
        let phase = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("phase.value").map(|r| r.trim_start_matches([' ', '=']).trim().to_string()))
            .unwrap_or_default();
        let status = match phase.as_str() {
            "pdOPT" => SolveStatus::Optimal,
            "pdFEAS" | "pFEAS" | "dFEAS" | "noINFO" => SolveStatus::NearOptimal,
            "pINF" | "dINF" | "pINF_dFEAS" | "pFEAS_dINF" | "pdINF" => SolveStatus::Infeasible,
            _ => SolveStatus::NumericalFailure,
        };
        return Ok((status, x));
    }
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or("empty solution")?;
    let x = numbers(first);
    if x.len() != m {
        return Err(format!("first line has {} values, expected {m}", x.len()));
    }
    let status = match exit_code {
        Some(0) => SolveStatus::Optimal,
        Some(1) | Some(2) => SolveStatus::Infeasible,
        Some(3) => SolveStatus::NearOptimal,
        _ => SolveStatus::NumericalFailure,
    };
    Ok((status, x))
}

fn report_from_x(program: &ConicProgram, status: SolveStatus, x: Vec<f64>, message: String, wall_time: f64) -> SolverReport {
    let blocks: Vec<DMatrix<f64>> = program.blocks.iter().map(|b| b.value(&x)).collect();
    let objective = program.objective_value(&x);
    let min_eig = program.min_eigenvalue(&x).min(0.0);
    let b_norm = program.equalities.iter().map(|e| e.rhs * e.rhs).sum::<f64>().sqrt().max(1.0);
    let eq_res = program.equalities.iter().map(|e| e.residual(&x).powi(2)).sum::<f64>().sqrt() / b_norm;
    SolverReport {
        status,
        message,
        dual_blocks: blocks.iter().map(|b| DMatrix::zeros(b.nrows(), b.ncols())).collect(),
        blocks,
        y: vec![0.0; program.equalities.len()],
        objective,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        relative_gap: f64::NAN,
        primal_residual: eq_res.max(-min_eig),
        dual_residual: f64::NAN,
        iterations: 0,
        wall_time,
        x,
    }
}
