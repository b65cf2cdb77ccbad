//! Inner solvers. Each one runs a fixed number of descent iterations on a
//! fixed surrogate `Ψ_k = f + m_k + C` and reports the trajectory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SymMatrix;

mod gauss_seidel;
mod lasso;
mod newton;
mod prox_grad;

pub use gauss_seidel::gauss_seidel_inner;
pub use lasso::{coordinate_descent, lasso_objective, weighted_lasso_cd, CoordinateModel, DenseLasso};
pub use newton::prox_newton_inner;
pub use prox_grad::prox_grad_inner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ProxGrad,
    ProxNewton,
    GaussSeidel,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [Self::ProxGrad, Self::ProxNewton, Self::GaussSeidel];

    pub fn name(self) -> &'static str {
        match self {
            Self::ProxGrad => "prox-grad",
            Self::ProxNewton => "prox-newton",
            Self::GaussSeidel => "gauss-seidel",
        }
    }

    /// Coordinate-descent passes per direction (Newton) or per column
    /// subproblem (Gauss–Seidel) when none is configured.
    pub fn default_cd_passes(self) -> usize {
        match self {
            Self::ProxGrad => 1,
            Self::ProxNewton => 1,
            Self::GaussSeidel => 25,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown solver kind {0:?}")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverKind {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownSolver(s.to_string()))
    }
}

/// Backtracking constants shared by the line searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearchParams {
    /// Fraction of the predicted decrease the Armijo test demands, in `(0, 1/2)`.
    pub armijo_gamma: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// First trial step: the Newton `α`, and a multiplier on the squared
    /// smallest Cholesky pivot for the proximal gradient step.
    pub initial_step: f64,
    /// Forward–backward descent margin: the proximal gradient step must
    /// satisfy its descent inequality with factor `1/2 + fb_delta`.
    pub fb_delta: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            armijo_gamma: 0.25,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            initial_step: 1.0,
            fb_delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidLineSearch {
    #[error("armijo_gamma must lie in (0, 1/2), got {0}")]
    ArmijoGamma(f64),
    #[error("backtrack_factor must lie in (0, 1), got {0}")]
    BacktrackFactor(f64),
    #[error("initial_step must be positive, got {0}")]
    InitialStep(f64),
    #[error("fb_delta must be positive, got {0}")]
    FbDelta(f64),
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<(), InvalidLineSearch> {
        if !(self.armijo_gamma > 0.0 && self.armijo_gamma < 0.5) {
            return Err(InvalidLineSearch::ArmijoGamma(self.armijo_gamma));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(InvalidLineSearch::BacktrackFactor(self.backtrack_factor));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(InvalidLineSearch::InitialStep(self.initial_step));
        }
        if !(self.fb_delta > 0.0) || !self.fb_delta.is_finite() {
            return Err(InvalidLineSearch::FbDelta(self.fb_delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("initial iterate is not positive definite")]
    InitialNotPd,
    #[error("iterate has dimension {found}, problem has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// How an inner run ended. Anything but `Completed` means the run stopped
/// early and `theta_out` is the last accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    Completed,
    LineSearchFailed { iteration: usize },
    SubproblemStall { iteration: usize, column: usize },
    LostDefiniteness { iteration: usize },
}

impl InnerStatus {
    pub fn is_failure(&self) -> bool {
        !matches!(self, Self::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Completed => "ok",
            Self::LineSearchFailed { .. } => "line-search-failed",
            Self::SubproblemStall { .. } => "subproblem-stall",
            Self::LostDefiniteness { .. } => "lost-definiteness",
        }
    }
}

/// Trajectory of one inner run. All per-iteration vectors have one entry per
/// completed iteration.
#[derive(Debug, Clone)]
pub struct InnerReport {
    pub theta_out: SymMatrix,
    pub iterations_done: usize,
    /// `Ψ_k` at the starting iterate.
    pub psi_start: f64,
    /// `Ψ_k` after each iteration.
    pub psi_trace: Vec<f64>,
    /// Accepted step size (`t` for proximal gradient, `α` for Newton, 1 for
    /// Gauss–Seidel sweeps).
    pub step_trace: Vec<f64>,
    /// `‖Θ_{i+1} − Θ_i‖²_F` per iteration.
    pub sq_step_norms: Vec<f64>,
    /// Newton only.
    pub active_set_sizes: Vec<usize>,
    /// Cumulative wall time in milliseconds at the end of each iteration.
    pub wall_ms: Vec<f64>,
    pub status: InnerStatus,
}

impl InnerReport {
    fn start(theta: &SymMatrix, psi_start: f64, iters: usize) -> Self {
        Self {
            theta_out: theta.clone(),
            iterations_done: 0,
            psi_start,
            psi_trace: Vec::with_capacity(iters),
            step_trace: Vec::with_capacity(iters),
            sq_step_norms: Vec::with_capacity(iters),
            active_set_sizes: Vec::new(),
            wall_ms: Vec::with_capacity(iters),
            status: InnerStatus::Completed,
        }
    }

    fn record(&mut self, psi: f64, step: f64, sq_step: f64, started: std::time::Instant) {
        self.iterations_done += 1;
        self.psi_trace.push(psi);
        self.step_trace.push(step);
        self.sq_step_norms.push(sq_step);
        self.wall_ms.push(started.elapsed().as_secs_f64() * 1e3);
    }

    pub fn psi_final(&self) -> f64 {
        self.psi_trace.last().copied().unwrap_or(self.psi_start)
    }

    /// Largest increase of `Ψ_k` between consecutive iterations, starting
    /// from `psi_start`. Non-positive for a monotone run.
    pub fn max_psi_increase(&self) -> f64 {
        let mut prev = self.psi_start;
        let mut worst = f64::NEG_INFINITY;
        for &p in &self.psi_trace {
            worst = worst.max(p - prev);
            prev = p;
        }
        worst
    }
}

fn check_dims(expected: usize, theta: &SymMatrix) -> Result<(), SolverError> {
    if theta.dim() != expected {
        return Err(SolverError::DimensionMismatch {
            expected,
            found: theta.dim(),
        });
    }
    Ok(())
}

/// Absolute slack tolerated on acceptance tests that compare objective values.
#[inline]
fn rounding_slack(reference: f64) -> f64 {
    1e-13 * (1.0 + reference.abs())
}

/// A step of at most a few ulps of the iterate is rounding, not progress.
#[inline]
fn below_resolution(sq_step: f64, theta: &SymMatrix) -> bool {
    sq_step <= (4.0 * f64::EPSILON).powi(2) * theta.dot(theta)
}
