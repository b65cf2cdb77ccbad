//! Iterations-per-reweighting sweep: for every solver, penalty and inner
//! budget `I`, a full γ grid search with `K` reweightings, summarized into one
//! CSV row per cell.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::data::{generate, offdiag_zero_fraction, SpecError, SyntheticSpec};
use super::grid::{default_gamma_grid, grid_point, select_best, GridRow, DEFAULT_GRID_POINTS};
use super::metrics::DEFAULT_SUPPORT_TOL;
use crate::driver::{ConfigError, SolverConfig};
use crate::matrix::{NotPd, SymMatrix};
use crate::penalty::{Penalty, PenaltyError, PenaltyKind};
use crate::solvers::{LineSearchParams, SolverKind};

pub const SWEEP_COLUMNS: [&str; 12] = [
    "solver",
    "penalty",
    "inner_iters",
    "total_iters",
    "best_f1",
    "best_nmse",
    "gamma_at_best_f1",
    "gamma_at_best_nmse",
    "realized_sparsity",
    "failed_points",
    "status",
    "wall_ms",
];

/// A penalty entry of a sweep config: either a bare kind (`"mcp"`) or an
/// object overriding the shape parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltySpec {
    Kind(PenaltyKind),
    Detailed {
        kind: PenaltyKind,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        penalize_diagonal: Option<bool>,
    },
}

impl PenaltySpec {
    pub fn kind(&self) -> PenaltyKind {
        match self {
            Self::Kind(k) | Self::Detailed { kind: k, .. } => *k,
        }
    }

    /// A penalty of this shape with strength `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Penalty, PenaltyError> {
        match *self {
            Self::Kind(kind) => Penalty::with_defaults(kind, gamma),
            Self::Detailed {
                kind,
                epsilon,
                penalize_diagonal,
            } => Penalty::new(
                kind,
                gamma,
                epsilon.unwrap_or_else(|| kind.default_epsilon()),
                penalize_diagonal.unwrap_or(true),
            ),
        }
    }
}

fn default_reweightings() -> usize {
    20
}

fn default_penalties() -> Vec<PenaltySpec> {
    PenaltyKind::ALL.into_iter().map(PenaltySpec::Kind).collect()
}

fn default_solvers() -> Vec<SolverKind> {
    SolverKind::ALL.to_vec()
}

fn default_support_tol() -> f64 {
    DEFAULT_SUPPORT_TOL
}

/// Sweep configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub inner_iters_grid: Vec<usize>,
    #[serde(default = "default_reweightings")]
    pub reweightings: usize,
    /// Regularization levels at initialization (the off-diagonal weight at
    /// the first reweighting); when absent, [`default_gamma_grid`] of the
    /// sampled covariance.
    #[serde(default)]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(default = "default_penalties")]
    pub penalties: Vec<PenaltySpec>,
    #[serde(default = "default_solvers")]
    pub solver_kinds: Vec<SolverKind>,
    pub data: SyntheticSpec,
    #[serde(default = "default_support_tol")]
    pub support_tol: f64,
    /// Worker threads; absent or 0 uses every available core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Overrides the per-solver default number of coordinate-descent passes.
    #[serde(default)]
    pub cd_passes: Option<usize>,
    #[serde(default)]
    pub line_search: LineSearchParams,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{0} must not be empty")]
    EmptyGrid(&'static str),
    #[error("gamma values must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("support_tol must be a non-negative number, got {0}")]
    BadSupportTol(f64),
    #[error("invalid data spec: {0}")]
    Data(#[from] SpecError),
    #[error("invalid penalty: {0}")]
    Penalty(#[from] PenaltyError),
    #[error("invalid solver settings: {0}")]
    Config(#[from] ConfigError),
    #[error("malformed sweep config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("generated precision matrix is not positive definite")]
    NotPd(#[from] NotPd),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.inner_iters_grid.is_empty() {
            return Err(SweepError::EmptyGrid("inner_iters_grid"));
        }
        if self.penalties.is_empty() {
            return Err(SweepError::EmptyGrid("penalties"));
        }
        if self.solver_kinds.is_empty() {
            return Err(SweepError::EmptyGrid("solver_kinds"));
        }
        if let Some(grid) = &self.gamma_grid {
            if grid.is_empty() {
                return Err(SweepError::EmptyGrid("gamma_grid"));
            }
            if let Some(&g) = grid.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
                return Err(SweepError::BadGamma(g));
            }
        }
        if !(self.support_tol >= 0.0) || !self.support_tol.is_finite() {
            return Err(SweepError::BadSupportTol(self.support_tol));
        }
        self.data.validate()?;
        for p in &self.penalties {
            p.with_gamma(1.0)?;
        }
        for &solver in &self.solver_kinds {
            for &inner in &self.inner_iters_grid {
                self.solver_config(solver, inner).validate()?;
            }
        }
        Ok(())
    }

    pub fn solver_config(&self, solver: SolverKind, inner_iters: usize) -> SolverConfig {
        let mut cfg = SolverConfig::new(solver, self.reweightings, inner_iters);
        cfg.ls = self.line_search;
        if let Some(passes) = self.cd_passes {
            cfg.cd_passes = passes;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub solver: SolverKind,
    pub penalty: PenaltyKind,
    pub inner_iters: usize,
    pub total_iters: usize,
    pub best_f1: Option<f64>,
    pub best_nmse: Option<f64>,
    pub gamma_at_best_f1: Option<f64>,
    pub gamma_at_best_nmse: Option<f64>,
    pub realized_sparsity: f64,
    pub failed_points: usize,
    pub status: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub gamma_grid: Vec<f64>,
    pub truth: SymMatrix,
    pub covariance: SymMatrix,
}

fn summarize(
    solver: SolverKind,
    penalty: PenaltyKind,
    inner_iters: usize,
    reweightings: usize,
    realized_sparsity: f64,
    rows: &[GridRow],
) -> SweepRow {
    let (bf, bn) = select_best(rows);
    let failed: Vec<&GridRow> = rows.iter().filter(|r| !r.outcome.is_ok()).collect();
    let status = match failed.first() {
        None => "ok".to_string(),
        Some(first) => first.outcome.label(),
    };
    SweepRow {
        solver,
        penalty,
        inner_iters,
        total_iters: reweightings * inner_iters,
        best_f1: bf.and_then(|k| rows[k].metrics.map(|m| m.f1)),
        best_nmse: bn.and_then(|k| rows[k].metrics.map(|m| m.nmse)),
        gamma_at_best_f1: bf.map(|k| rows[k].gamma),
        gamma_at_best_nmse: bn.map(|k| rows[k].gamma),
        realized_sparsity,
        failed_points: failed.len(),
        status,
        wall_ms: rows.iter().map(|r| r.wall_ms).sum(),
    }
}

/// Runs the sweep. Grid points are independent jobs spread over the worker
/// pool; rows come back in config order (solver, then penalty, then `I`)
/// whatever the completion order.
pub fn budget_sweep(spec: &SweepSpec) -> Result<SweepOutput, SweepError> {
    spec.validate()?;
    let (truth, s) = generate(&spec.data)?;
    let gammas = match &spec.gamma_grid {
        Some(g) => g.clone(),
        None => default_gamma_grid(&s, DEFAULT_GRID_POINTS),
    };
    let realized = offdiag_zero_fraction(&truth);

    let mut cells = Vec::new();
    for &solver in &spec.solver_kinds {
        for penalty in &spec.penalties {
            for &inner in &spec.inner_iters_grid {
                cells.push((solver, penalty, inner));
            }
        }
    }
    let jobs: Vec<(usize, f64)> = (0..cells.len())
        .flat_map(|c| gammas.iter().map(move |&g| (c, g)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(0))
        .build()?;
    let results: Vec<GridRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, gamma)| {
                let (solver, penalty, inner) = cells[c];
                let cfg = spec.solver_config(solver, inner);
                let template = penalty
                    .with_gamma(1.0)
                    .expect("penalty validated before the sweep starts");
                grid_point(&template, &s, gamma, &cfg, &truth, spec.support_tol)
            })
            .collect()
    });

    let rows = cells
        .iter()
        .zip(results.chunks(gammas.len()))
        .map(|(&(solver, penalty, inner), grid_rows)| {
            summarize(solver, penalty.kind(), inner, spec.reweightings, realized, grid_rows)
        })
        .collect();
    Ok(SweepOutput {
        rows,
        gamma_grid: gammas,
        truth,
        covariance: s,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the sweep rows as RFC-4180 CSV with a header row. `wall_ms` is the
/// only column that varies between identical runs.
pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.solver.name().to_string(),
            r.penalty.name().to_string(),
            r.inner_iters.to_string(),
            r.total_iters.to_string(),
            opt(r.best_f1),
            opt(r.best_nmse),
            opt(r.gamma_at_best_f1),
            opt(r.gamma_at_best_nmse),
            r.realized_sparsity.to_string(),
            r.failed_points.to_string(),
            r.status.clone(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        SweepSpec::from_json(
            r#"{
                "inner_iters_grid": [2],
                "reweightings": 2,
                "gamma_grid": [0.05],
                "penalties": ["log-sum"],
                "solver_kinds": ["prox-newton"],
                "data": {"dim": 6, "sparsity": 0.7, "n_samples": 200, "seed": 4}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn single_cell_single_row() {
        let out = budget_sweep(&tiny_spec()).unwrap();
        assert_eq!(out.rows.len(), 1);
        let r = &out.rows[0];
        assert_eq!(r.total_iters, 4);
        assert_eq!(r.status, "ok");
        // log-sum with ε = 0.1: φ'(0) = γ/ε
        assert!((r.gamma_at_best_f1.unwrap() - 0.005).abs() < 1e-15);
        let mut buf = Vec::new();
        write_sweep_csv(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("solver,penalty,inner_iters,total_iters,best_f1"));
    }

    #[test]
    fn penalty_spec_forms() {
        let bare: PenaltySpec = serde_json::from_str(r#""mcp""#).unwrap();
        assert_eq!(bare.kind(), PenaltyKind::Mcp);
        assert_eq!(bare.with_gamma(1.0).unwrap().epsilon(), 3.0);
        let full: PenaltySpec =
            serde_json::from_str(r#"{"kind": "log-sum", "epsilon": 0.5, "penalize_diagonal": false}"#).unwrap();
        let p = full.with_gamma(2.0).unwrap();
        assert_eq!(p.epsilon(), 0.5);
        assert!(!p.penalize_diagonal());
    }

    #[test]
    fn config_errors() {
        let base = r#""data": {"dim": 6, "sparsity": 0.7, "n_samples": 20}"#;
        let cases = [
            format!(r#"{{"inner_iters_grid": [], {base}}}"#),
            format!(r#"{{"inner_iters_grid": [1], "gamma_grid": [-1.0], {base}}}"#),
            format!(r#"{{"inner_iters_grid": [0], {base}}}"#),
            format!(r#"{{"inner_iters_grid": [1], "penalties": [{{"kind": "mcp", "epsilon": 0.5}}], {base}}}"#),
            format!(r#"{{"inner_iters_grid": [1], "bogus": 1, {base}}}"#),
            r#"{"inner_iters_grid": [1], "data": {"dim": 1, "sparsity": 0.7, "n_samples": 20}}"#.to_string(),
            "not json".to_string(),
        ];
        for c in &cases {
            assert!(SweepSpec::from_json(c).is_err(), "accepted {c}");
        }
    }
}
