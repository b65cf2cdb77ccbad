//! Sparse precision matrix estimation with non-convex penalties.
//!
//! The estimator minimizes `−log det Θ + Tr(SΘ) + Σ φ(|θ_ij|)` over symmetric
//! positive definite `Θ`, where `φ` is concave and increasing (log-sum, ℓ½,
//! MCP, or plain ℓ1). Each outer step replaces `φ` by its tangent at the
//! current iterate, which turns the problem into a weighted graphical lasso,
//! and runs a few iterations of an inner solver on it:
//!
//! * [`SolverKind::ProxGrad`]: proximal gradient with backtracking,
//! * [`SolverKind::ProxNewton`]: proximal Newton with coordinate descent on an
//!   active set,
//! * [`SolverKind::GaussSeidel`]: exact column-by-column block updates.
//!
//! ```
//! use reweighted_glasso::{default_theta0, solve, GlassoProblem, Penalty, PenaltyKind, SolverConfig, SolverKind, SymMatrix};
//!
//! let s = SymMatrix::from_rows(&[vec![1.0, 0.4], vec![0.4, 1.0]]).unwrap();
//! let penalty = Penalty::with_defaults(PenaltyKind::LogSum, 0.02).unwrap();
//! let problem = GlassoProblem::new(s, penalty).unwrap();
//! let theta0 = default_theta0(problem.covariance(), 0.02).unwrap();
//! let cfg = SolverConfig::new(SolverKind::ProxNewton, 10, 10);
//! let (theta, trace) = solve(&problem, &theta0, &cfg).unwrap();
//! assert!(trace.failure.is_none());
//! assert!(theta.get(0, 1) < 0.0);
//! ```

// `!(x > 0.0)` style checks are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod driver;
pub mod experiments;
pub mod matrix;
pub mod objective;
pub mod penalty;
pub mod rng;
pub mod solvers;

pub use driver::{default_theta0, diagonal_shift, solve, ConfigError, RunTrace, SolveError, SolverConfig};
pub use matrix::{cholesky, CholeskyFactor, FormatError, MatrixError, NotPd, SymMatrix};
pub use objective::{GlassoProblem, MajorantState};
pub use penalty::{Penalty, PenaltyError, PenaltyKind, WeightField};
pub use solvers::{InnerReport, InnerStatus, LineSearchParams, SolverKind};
