//! The outer reweighting loop shared by all inner solvers.

use std::time::Instant;

use thiserror::Error;

use crate::matrix::{cholesky, SymMatrix};
use crate::objective::{stationarity_residual, GlassoProblem};
use crate::solvers::{
    gauss_seidel_inner, prox_grad_inner, prox_newton_inner, InnerReport, InnerStatus, InvalidLineSearch,
    LineSearchParams, SolverError, SolverKind,
};

/// Upper bound on `reweightings × inner_iters`.
pub const MAX_TOTAL_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("reweightings must be at least 1")]
    NoReweightings,
    #[error("inner_iters must be at least 1")]
    NoInnerIterations,
    #[error("cd_passes must be at least 1")]
    NoCdPasses,
    #[error("total budget {0} exceeds the cap of {MAX_TOTAL_ITERATIONS} iterations")]
    BudgetTooLarge(usize),
    #[error("stop_gap must be a non-negative number, got {0}")]
    StopGap(f64),
    #[error(transparent)]
    LineSearch(#[from] InvalidLineSearch),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub solver_kind: SolverKind,
    /// Number of majorant rebuilds `K`.
    pub reweightings: usize,
    /// Inner iterations per reweighting `I`.
    pub inner_iters: usize,
    pub ls: LineSearchParams,
    pub cd_passes: usize,
    /// Stop once the stationarity gap falls below this; 0 disables.
    pub stop_gap: f64,
}

impl SolverConfig {
    pub fn new(solver_kind: SolverKind, reweightings: usize, inner_iters: usize) -> Self {
        Self {
            solver_kind,
            reweightings,
            inner_iters,
            ls: LineSearchParams::default(),
            cd_passes: solver_kind.default_cd_passes(),
            stop_gap: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.reweightings == 0 {
            return Err(ConfigError::NoReweightings);
        }
        if self.inner_iters == 0 {
            return Err(ConfigError::NoInnerIterations);
        }
        if self.cd_passes == 0 {
            return Err(ConfigError::NoCdPasses);
        }
        let total = self.reweightings.saturating_mul(self.inner_iters);
        if total > MAX_TOTAL_ITERATIONS {
            return Err(ConfigError::BudgetTooLarge(total));
        }
        if !(self.stop_gap >= 0.0) {
            return Err(ConfigError::StopGap(self.stop_gap));
        }
        self.ls.validate()?;
        Ok(())
    }
}

/// Per-reweighting record of a run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// `Ψ(x⁰)`.
    pub psi_initial: f64,
    /// `Ψ(x^{k+1})` after each reweighting.
    pub psi_outer: Vec<f64>,
    pub inner_reports: Vec<InnerReport>,
    /// Stationarity gap of `Ψ` at `x^{k+1}` (weights rebuilt at that point).
    pub gaps: Vec<f64>,
    /// Wall time of each reweighting in milliseconds.
    pub wall_ms: Vec<f64>,
    /// First inner failure, if any; the run stops there.
    pub failure: Option<InnerStatus>,
}

impl RunTrace {
    pub fn total_inner_iterations(&self) -> usize {
        self.inner_reports.iter().map(|r| r.iterations_done).sum()
    }

    /// Largest increase between consecutive outer objective values, starting
    /// from `psi_initial`.
    pub fn max_outer_increase(&self) -> f64 {
        let mut prev = self.psi_initial;
        let mut worst = f64::NEG_INFINITY;
        for &p in &self.psi_outer {
            worst = worst.max(p - prev);
            prev = p;
        }
        worst
    }

    pub fn final_psi(&self) -> f64 {
        self.psi_outer.last().copied().unwrap_or(self.psi_initial)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("initial iterate is not positive definite")]
    InitialNotPd,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Runs `K` reweightings: rebuild the tangent majorant at the current
/// iterate, then run the configured inner solver for `I` iterations on it.
pub fn solve(
    p: &GlassoProblem,
    theta0: &SymMatrix,
    cfg: &SolverConfig,
) -> Result<(SymMatrix, RunTrace), SolveError> {
    cfg.validate()?;
    let psi_initial = p.psi_value(theta0).map_err(|_| SolveError::InitialNotPd)?;
    let mut theta = theta0.clone();
    let mut majorant = p.make_majorant(&theta).map_err(|_| SolveError::InitialNotPd)?;
    let mut trace = RunTrace {
        psi_initial,
        psi_outer: Vec::with_capacity(cfg.reweightings),
        inner_reports: Vec::with_capacity(cfg.reweightings),
        gaps: Vec::with_capacity(cfg.reweightings),
        wall_ms: Vec::with_capacity(cfg.reweightings),
        failure: None,
    };

    for _ in 0..cfg.reweightings {
        let started = Instant::now();
        let report = match cfg.solver_kind {
            SolverKind::ProxGrad => prox_grad_inner(p, &majorant, &theta, cfg.inner_iters, &cfg.ls)?,
            SolverKind::ProxNewton => {
                prox_newton_inner(p, &majorant, &theta, cfg.inner_iters, &cfg.ls, cfg.cd_passes)?
            }
            SolverKind::GaussSeidel => gauss_seidel_inner(p, &majorant, &theta, cfg.inner_iters, cfg.cd_passes)?,
        };
        theta = report.theta_out.clone();
        let status = report.status;
        trace.inner_reports.push(report);

        // Inner solvers only return positive definite iterates.
        let chol = cholesky(&theta).map_err(|_| SolverError::InitialNotPd)?;
        trace
            .psi_outer
            .push(p.f_value_factored(&theta, &chol) + p.penalty().value(&theta));
        majorant = p.make_majorant(&theta).map_err(|_| SolverError::InitialNotPd)?;
        let gap = stationarity_residual(&p.f_grad(&chol), &theta, &majorant.weights);
        trace.gaps.push(gap);
        trace.wall_ms.push(started.elapsed().as_secs_f64() * 1e3);

        if status.is_failure() {
            trace.failure = Some(status);
            break;
        }
        if cfg.stop_gap > 0.0 && gap < cfg.stop_gap {
            break;
        }
    }
    Ok((theta, trace))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("covariance diagonal entry {index} is {value}; it must be positive")]
pub struct NonPositiveDiagonal {
    pub index: usize,
    pub value: f64,
}

/// `diag(1/(s_ii + γ))`, the exact solution of the problem restricted to
/// diagonal matrices under an ℓ1 penalty of strength `γ` on the diagonal.
pub fn default_theta0(s: &SymMatrix, gamma: f64) -> Result<SymMatrix, NonPositiveDiagonal> {
    let diag = s.diag();
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(NonPositiveDiagonal { index, value });
    }
    Ok(SymMatrix::from_diag(
        &diag.iter().map(|v| 1.0 / (v + gamma)).collect::<Vec<_>>(),
    ))
}

/// Diagonal shift used by [`default_theta0`] for a given problem: the
/// penalty strength when the diagonal is penalized, zero otherwise.
pub fn diagonal_shift(p: &GlassoProblem) -> f64 {
    if p.penalty().penalize_diagonal() {
        p.penalty().gamma()
    } else {
        0.0
    }
}
