use std::time::Instant;

use super::{below_resolution, check_dims, rounding_slack, InnerReport, InnerStatus, LineSearchParams, SolverError};
use crate::matrix::{cholesky, log_det_bregman, SymMatrix};
use crate::objective::{GlassoProblem, MajorantState};
use crate::penalty::WeightField;

/// Proximal gradient (graphical ISTA) on the surrogate `Ψ_k`.
///
/// Each iteration takes a forward step on `f`, soft-thresholds with the
/// surrogate weights, and backtracks the step `t` until the candidate is
/// positive definite, satisfies the forward–backward descent inequality
///
/// `m(Θ⁺) + ⟨∇f(Θ), Θ⁺ − Θ⟩ + (1/2 + δ)/t ‖Θ⁺ − Θ‖² ≤ m(Θ)`,
///
/// and lies under the quadratic upper model of `f` with curvature `1/t`.
/// Together these give `Ψ_k(Θ⁺) ≤ Ψ_k(Θ) − δ/t ‖Θ⁺ − Θ‖²`. Both tests are
/// evaluated as differences and checked to a few ulps. A trial step below
/// the resolution of `Θ` is recorded as a null step, and so are the
/// remaining iterations when backtracking runs out with every violation at
/// rounding level.
///
/// The first trial step of every iteration is
/// `ls.initial_step · (smallest Cholesky pivot of Θ)²`.
pub fn prox_grad_inner(
    p: &GlassoProblem,
    m: &MajorantState,
    theta0: &SymMatrix,
    iters: usize,
    ls: &LineSearchParams,
) -> Result<InnerReport, SolverError> {
    check_dims(p.dim(), theta0)?;
    let started = Instant::now();
    let mut theta = theta0.clone();
    let mut chol = cholesky(&theta).map_err(|_| SolverError::InitialNotPd)?;
    let mut f_cur = p.f_value_factored(&theta, &chol);
    let mut m_cur = m.weights.majorant_value(&theta);
    let mut report = InnerReport::start(&theta, f_cur + m_cur + m.tangent_constant, iters);
    let alpha = 0.5 + ls.fb_delta;

    for it in 0..iters {
        let w = chol.inverse();
        let grad = p.covariance().sub(&w);
        let mut t = ls.initial_step * chol.min_pivot().powi(2);
        let mut accepted = None;
        let mut least_violation = f64::INFINITY;
        for _ in 0..=ls.max_backtracks {
            let cand = m.weights.soft_threshold(&theta.axpy(-t, &grad), t);
            let delta = cand.sub(&theta);
            let sq = delta.dot(&delta);
            if below_resolution(sq, &theta) {
                accepted = Some((theta.clone(), chol.clone(), f_cur, m_cur, 0.0));
                break;
            }
            if let Ok(cand_chol) = cholesky(&cand) {
                // both tests are formed from differences so that rounding
                // scales with the step rather than with Ψ
                let (fb, fb_scale) = fb_excess(&m.weights, &theta, &cand, &grad, alpha / t);
                let bregman = log_det_bregman(&chol, &cand_chol, &delta, &w);
                let quad = bregman - sq / (2.0 * t);
                let quad_scale = bregman.abs() + sq / (2.0 * t);
                if fb <= ulp_slack(fb_scale) && quad <= ulp_slack(quad_scale) {
                    let m_cand = m.weights.majorant_value(&cand);
                    let f_cand = p.f_value_factored(&cand, &cand_chol);
                    accepted = Some((cand, cand_chol, f_cand, m_cand, sq));
                    break;
                }
                least_violation = least_violation.min(fb.max(quad));
            }
            t *= ls.backtrack_factor;
        }
        match accepted {
            Some((cand, cand_chol, f_cand, m_cand, sq)) => {
                theta = cand;
                chol = cand_chol;
                f_cur = f_cand;
                m_cur = m_cand;
                report.record(f_cur + m_cur + m.tangent_constant, t, sq, started);
            }
            // Every trial failed only by rounding: the iterate is stationary
            // to working precision, and from the same point every remaining
            // iteration would end the same way.
            None if least_violation <= rounding_slack(f_cur) + rounding_slack(m_cur) => {
                let psi = f_cur + m_cur + m.tangent_constant;
                for _ in it..iters {
                    report.record(psi, 0.0, 0.0, started);
                }
                break;
            }
            None => {
                report.status = InnerStatus::LineSearchFailed { iteration: it };
                break;
            }
        }
    }
    report.theta_out = theta;
    Ok(report)
}

fn ulp_slack(scale: f64) -> f64 {
    8.0 * f64::EPSILON * scale
}

/// `m(Θ⁺) − m(Θ) + ⟨g, Δ⟩ + c‖Δ‖²` summed entrywise, with the sum of
/// absolute terms.
fn fb_excess(w: &WeightField, theta: &SymMatrix, cand: &SymMatrix, grad: &SymMatrix, c: f64) -> (f64, f64) {
    let mut total = 0.0;
    let mut scale = 0.0;
    let entries = w.as_matrix().as_slice().iter().zip(theta.as_slice()).zip(cand.as_slice()).zip(grad.as_slice());
    for (((&wij, &old), &new), &g) in entries {
        let dx = new - old;
        let terms = [wij * (new.abs() - old.abs()), g * dx, c * dx * dx];
        total += terms.iter().sum::<f64>();
        scale += terms.iter().map(|x| x.abs()).sum::<f64>();
    }
    (total, scale)
}
