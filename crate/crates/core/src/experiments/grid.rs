//! Regularization grid search against a known ground truth.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use super::metrics::{metric_pair, MetricPair, ZeroTruth};
use crate::driver::{default_theta0, diagonal_shift, solve, SolverConfig};
use crate::matrix::SymMatrix;
use crate::objective::GlassoProblem;
use crate::penalty::Penalty;

pub const DEFAULT_GRID_POINTS: usize = 20;

/// `n` log-spaced values in `[10⁻², 10⁰] · max_{i≠j} |s_ij|`. Falls back to
/// the largest diagonal entry when `s` is diagonal.
///
/// Grid values are regularization levels at initialization: the weight
/// `φ'(0)` that off-diagonal entries receive at the first reweighting (see
/// [`Penalty::with_initial_weight`]). For ℓ1 and MCP this is `γ` itself.
pub fn default_gamma_grid(s: &SymMatrix, n: usize) -> Vec<f64> {
    let mut scale = s.max_abs_offdiag();
    if !(scale > 0.0) {
        scale = s.max_abs();
    }
    if !(scale > 0.0) {
        scale = 1.0;
    }
    log_space(1e-2 * scale, scale, n)
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Ok,
    /// The solve started but an inner solver stopped early.
    SolverFailed(&'static str),
    /// The solve could not run.
    Invalid(String),
}

impl RowOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Ok => "ok".to_string(),
            Self::SolverFailed(l) => (*l).to_string(),
            Self::Invalid(msg) => format!("invalid: {msg}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridRow {
    /// Grid value: the initial off-diagonal weight.
    pub lambda0: f64,
    /// Penalty strength that produces it; `NaN` if the penalty was invalid.
    pub gamma: f64,
    pub metrics: Option<MetricPair>,
    pub final_psi: Option<f64>,
    pub outcome: RowOutcome,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct GridTable {
    pub rows: Vec<GridRow>,
    /// Index of the first successful row with the largest F1.
    pub best_f1: Option<usize>,
    /// Index of the first successful row with the smallest NMSE.
    pub best_nmse: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("gamma grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    ZeroTruth(#[from] ZeroTruth),
}

/// Solves the problem at one grid value from the diagonal starting point and
/// scores the estimate. Failures are recorded in the row, never propagated.
pub fn grid_point(
    template: &Penalty,
    s: &SymMatrix,
    lambda0: f64,
    cfg: &SolverConfig,
    truth: &SymMatrix,
    support_tol: f64,
) -> GridRow {
    let started = Instant::now();
    let penalty = template.with_initial_weight(lambda0);
    let gamma = penalty.as_ref().map_or(f64::NAN, |p| p.gamma());
    let row = |metrics, final_psi, outcome| GridRow {
        lambda0,
        gamma,
        metrics,
        final_psi,
        outcome,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let penalty = match penalty {
        Ok(p) => p,
        Err(e) => return row(None, None, RowOutcome::Invalid(e.to_string())),
    };
    let problem = match GlassoProblem::new(s.clone(), penalty) {
        Ok(p) => p,
        Err(e) => return row(None, None, RowOutcome::Invalid(e.to_string())),
    };
    let theta0 = match default_theta0(s, diagonal_shift(&problem)) {
        Ok(t) => t,
        Err(e) => return row(None, None, RowOutcome::Invalid(e.to_string())),
    };
    match solve(&problem, &theta0, cfg) {
        Ok((theta, trace)) => {
            let metrics = metric_pair(&theta, truth, support_tol).ok();
            let outcome = match trace.failure {
                Some(status) => RowOutcome::SolverFailed(status.label()),
                None => RowOutcome::Ok,
            };
            row(metrics, Some(trace.final_psi()), outcome)
        }
        Err(e) => row(None, None, RowOutcome::Invalid(e.to_string())),
    }
}

/// Picks the best rows among those that completed.
pub fn select_best(rows: &[GridRow]) -> (Option<usize>, Option<usize>) {
    let mut best_f1: Option<(usize, f64)> = None;
    let mut best_nmse: Option<(usize, f64)> = None;
    for (k, r) in rows.iter().enumerate() {
        let Some(m) = r.metrics.filter(|_| r.outcome.is_ok()) else {
            continue;
        };
        if best_f1.is_none_or(|(_, f)| m.f1 > f) {
            best_f1 = Some((k, m.f1));
        }
        if best_nmse.is_none_or(|(_, e)| m.nmse < e) {
            best_nmse = Some((k, m.nmse));
        }
    }
    (best_f1.map(|b| b.0), best_nmse.map(|b| b.0))
}

/// One independent solve per grid value, each from the diagonal starting
/// point. Only the shape of `template` matters; its `γ` is replaced.
pub fn grid_search(
    template: &Penalty,
    s: &SymMatrix,
    grid: &[f64],
    cfg: &SolverConfig,
    truth: &SymMatrix,
    support_tol: f64,
) -> Result<GridTable, GridError> {
    if grid.is_empty() {
        return Err(GridError::EmptyGrid);
    }
    metric_pair(truth, truth, support_tol)?;
    let rows: Vec<GridRow> = grid
        .par_iter()
        .map(|&g| grid_point(template, s, g, cfg, truth, support_tol))
        .collect();
    let (best_f1, best_nmse) = select_best(&rows);
    Ok(GridTable {
        rows,
        best_f1,
        best_nmse,
    })
}

impl GridTable {
    /// RFC-4180 CSV with one row per grid point.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda0", "gamma", "f1", "nmse", "final_psi", "best_f1", "best_nmse", "status", "wall_ms"])?;
        for (k, r) in self.rows.iter().enumerate() {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.write_record([
                r.lambda0.to_string(),
                r.gamma.to_string(),
                opt(r.metrics.map(|m| m.f1)),
                opt(r.metrics.map(|m| m.nmse)),
                opt(r.final_psi),
                (self.best_f1 == Some(k)).to_string(),
                (self.best_nmse == Some(k)).to_string(),
                r.outcome.label(),
                format!("{:.3}", r.wall_ms),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
