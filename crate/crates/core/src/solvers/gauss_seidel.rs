use std::time::Instant;

use super::lasso::{coordinate_descent, DenseLasso};
use super::{check_dims, InnerReport, InnerStatus, SolverError};
use crate::matrix::{cholesky, SymMatrix};
use crate::objective::{GlassoProblem, MajorantState};

/// Stop a column subproblem once a coordinate sweep moves nothing by more
/// than this.
const COLUMN_TOL: f64 = 1e-13;

/// Primal column-block minimization (P-GLasso style) of the surrogate `Ψ_k`.
///
/// For column `c`, write `Θ = [[Θ₁₁, x], [xᵀ, θ₂₂]]` and `A = Θ₁₁⁻¹`. With the
/// Schur complement `u = θ₂₂ − xᵀAx` the surrogate separates into
/// `−log u + (s₂₂ + λ₂₂) u`, minimized at `u = 1/(s₂₂ + λ₂₂)`, and the weighted
/// lasso `½ xᵀ[(s₂₂ + λ₂₂)A]x + s₁₂ᵀx + Σ λ_i |x_i|`, solved by coordinate
/// descent warm-started at the current column. Positive definiteness follows
/// from `u > 0`.
///
/// `W = Θ⁻¹` is refactored at the start of every sweep and updated with
/// block-inverse identities after each column. One iteration is one sweep
/// over all `d` columns.
pub fn gauss_seidel_inner(
    p: &GlassoProblem,
    m: &MajorantState,
    theta0: &SymMatrix,
    sweeps: usize,
    cd_passes: usize,
) -> Result<InnerReport, SolverError> {
    check_dims(p.dim(), theta0)?;
    let started = Instant::now();
    let d = p.dim();
    let s = p.covariance();
    let mut theta = theta0.clone();
    let mut chol = cholesky(&theta).map_err(|_| SolverError::InitialNotPd)?;
    let psi0 = p.f_value_factored(&theta, &chol) + m.value(&theta);
    let mut report = InnerReport::start(&theta, psi0, sweeps);

    'sweeps: for it in 0..sweeps {
        let mut w = chol.inverse();
        let mut sq_step = 0.0;
        for c in 0..d {
            let others: Vec<usize> = (0..d).filter(|&k| k != c).collect();
            let scale = s.get(c, c) + m.weights.get(c, c);
            if !(scale > 0.0) {
                report.status = InnerStatus::SubproblemStall { iteration: it, column: c };
                break 'sweeps;
            }
            let (a, x, ax) = if others.is_empty() {
                (None, Vec::new(), Vec::new())
            } else {
                let w22 = w.get(c, c);
                // Θ₁₁⁻¹ = W₁₁ − w₁₂ w₁₂ᵀ / w₂₂
                let a = SymMatrix::from_fn(d - 1, |i, j| {
                    let (gi, gj) = (others[i], others[j]);
                    w.get(gi, gj) - w.get(gi, c) * w.get(gj, c) / w22
                });
                let q = a.scaled(scale);
                let b: Vec<f64> = others.iter().map(|&k| s.get(k, c)).collect();
                let lam: Vec<f64> = others.iter().map(|&k| m.weights.get(k, c)).collect();
                let x0: Vec<f64> = others.iter().map(|&k| theta.get(k, c)).collect();

                let before = DenseLasso::new(&q, &b, &lam, &x0).objective();
                let mut lasso = DenseLasso::new(&q, &b, &lam, &x0);
                coordinate_descent(&mut lasso, cd_passes.max(1), COLUMN_TOL);
                let after = lasso.objective();
                if !(after <= before + 1e-12 * (1.0 + before.abs())) {
                    report.status = InnerStatus::SubproblemStall { iteration: it, column: c };
                    break 'sweeps;
                }
                // A x = (Q x) / scale
                let ax: Vec<f64> = lasso.ax().iter().map(|v| v / scale).collect();
                (Some(a), lasso.into_x(), ax)
            };

            let u = 1.0 / scale;
            let quad: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let theta22 = u + quad;

            for (k, &gk) in others.iter().enumerate() {
                let diff = x[k] - theta.get(gk, c);
                sq_step += 2.0 * diff * diff;
                theta.set(gk, c, x[k]);
            }
            let diff = theta22 - theta.get(c, c);
            sq_step += diff * diff;
            theta.set(c, c, theta22);

            // New inverse: W₂₂ = 1/u, w₁₂ = −A x / u, W₁₁ = A + (Ax)(Ax)ᵀ / u.
            if let Some(a) = a {
                for (i, &gi) in others.iter().enumerate() {
                    for (j, &gj) in others.iter().enumerate().skip(i) {
                        w.set(gi, gj, a.get(i, j) + ax[i] * ax[j] / u);
                    }
                    w.set(gi, c, -ax[i] / u);
                }
            }
            w.set(c, c, 1.0 / u);
        }

        match cholesky(&theta) {
            Ok(f) => chol = f,
            Err(_) => {
                report.status = InnerStatus::LostDefiniteness { iteration: it };
                break;
            }
        }
        let psi = p.f_value_factored(&theta, &chol) + m.value(&theta);
        report.record(psi, 1.0, sq_step, started);
        report.theta_out = theta.clone();
    }
    // On failure keep the last iterate that completed a sweep.
    if !report.status.is_failure() {
        report.theta_out = theta;
    }
    Ok(report)
}
