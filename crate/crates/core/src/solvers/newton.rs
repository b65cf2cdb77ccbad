use std::time::Instant;

use super::lasso::{coordinate_descent, CoordinateModel};
use super::{below_resolution, check_dims, rounding_slack, InnerReport, InnerStatus, LineSearchParams, SolverError};
use crate::matrix::{cholesky, SymMatrix};
use crate::objective::{GlassoProblem, MajorantState};
use crate::penalty::WeightField;

/// Quadratic model `⟨G, D⟩ + ½ Tr(WDWD) + Σ λ_ij |Θ_ij + D_ij|` restricted to
/// an active set of upper-triangle pairs. A coordinate is a symmetric pair, so
/// every quantity below is half the change of the full-matrix model for
/// off-diagonal pairs.
struct NewtonModel<'a> {
    d: usize,
    w: &'a SymMatrix,
    grad: &'a SymMatrix,
    theta: &'a SymMatrix,
    weights: &'a WeightField,
    active: &'a [(usize, usize)],
    /// Direction `D`, dense row-major.
    dir: Vec<f64>,
    /// `U = D W`, dense row-major.
    dw: Vec<f64>,
}

impl NewtonModel<'_> {
    /// `(W D W)_ij = Σ_k W_ik U_kj`
    fn wdw(&self, i: usize, j: usize) -> f64 {
        let wi = self.w.row(i);
        let mut s = 0.0;
        for (k, &wik) in wi.iter().enumerate() {
            s += wik * self.dw[k * self.d + j];
        }
        s
    }

    fn add_scaled_row(&mut self, dst_row: usize, src_row: usize, scale: f64) {
        let d = self.d;
        let src = self.w.row(src_row);
        let dst = &mut self.dw[dst_row * d..(dst_row + 1) * d];
        for (o, &v) in dst.iter_mut().zip(src) {
            *o += scale * v;
        }
    }
}

impl CoordinateModel for NewtonModel<'_> {
    fn len(&self) -> usize {
        self.active.len()
    }

    fn curvature(&self, k: usize) -> f64 {
        let (i, j) = self.active[k];
        if i == j {
            self.w.get(i, i).powi(2)
        } else {
            self.w.get(i, j).powi(2) + self.w.get(i, i) * self.w.get(j, j)
        }
    }

    fn partial(&self, k: usize) -> f64 {
        let (i, j) = self.active[k];
        self.grad.get(i, j) + self.wdw(i, j)
    }

    fn position(&self, k: usize) -> f64 {
        let (i, j) = self.active[k];
        self.theta.get(i, j) + self.dir[i * self.d + j]
    }

    fn weight(&self, k: usize) -> f64 {
        let (i, j) = self.active[k];
        self.weights.get(i, j)
    }

    fn shift(&mut self, k: usize, delta: f64) {
        let (i, j) = self.active[k];
        let d = self.d;
        self.dir[i * d + j] += delta;
        if i != j {
            self.dir[j * d + i] += delta;
            // U = D W: rows i and j of D changed.
            self.add_scaled_row(i, j, delta);
            self.add_scaled_row(j, i, delta);
        } else {
            self.add_scaled_row(i, i, delta);
        }
    }
}

/// Free entries plus zero entries whose gradient exceeds their weight.
/// Ties `|g_ij| == λ_ij` at a zero entry stay out.
fn active_set(theta: &SymMatrix, grad: &SymMatrix, weights: &WeightField) -> Vec<(usize, usize)> {
    let d = theta.dim();
    let mut set = Vec::new();
    for i in 0..d {
        for j in i..d {
            if theta.get(i, j) != 0.0 || grad.get(i, j).abs() > weights.get(i, j) {
                set.push((i, j));
            }
        }
    }
    set
}

/// Proximal Newton (QUIC-style) on the surrogate `Ψ_k`.
///
/// Per iteration: select the active set, compute the Newton direction by
/// `cd_passes` coordinate-descent sweeps over it (`W = Θ⁻¹` carries the
/// Hessian), then backtrack `α` from `ls.initial_step` until `Θ + αD` is
/// positive definite and
///
/// `Ψ_k(Θ + αD) ≤ Ψ_k(Θ) + σ α (⟨G, D⟩ + m(Θ + D) − m(Θ))`.
pub fn prox_newton_inner(
    p: &GlassoProblem,
    m: &MajorantState,
    theta0: &SymMatrix,
    iters: usize,
    ls: &LineSearchParams,
    cd_passes: usize,
) -> Result<InnerReport, SolverError> {
    check_dims(p.dim(), theta0)?;
    let started = Instant::now();
    let d = p.dim();
    let mut theta = theta0.clone();
    let mut chol = cholesky(&theta).map_err(|_| SolverError::InitialNotPd)?;
    let mut f_cur = p.f_value_factored(&theta, &chol);
    let mut m_cur = m.weights.majorant_value(&theta);
    let mut report = InnerReport::start(&theta, f_cur + m_cur + m.tangent_constant, iters);
    report.active_set_sizes.reserve(iters);

    for it in 0..iters {
        let w = chol.inverse();
        let grad = p.covariance().sub(&w);
        let active = active_set(&theta, &grad, &m.weights);

        let mut model = NewtonModel {
            d,
            w: &w,
            grad: &grad,
            theta: &theta,
            weights: &m.weights,
            active: &active,
            dir: vec![0.0; d * d],
            dw: vec![0.0; d * d],
        };
        coordinate_descent(&mut model, cd_passes.max(1), 0.0);
        let dir = SymMatrix::symmetrize(d, &model.dir);
        drop(model);

        if below_resolution(dir.dot(&dir), &theta) {
            report.active_set_sizes.push(active.len());
            report.record(f_cur + m_cur + m.tangent_constant, ls.initial_step, 0.0, started);
            continue;
        }

        let psi_cur = f_cur + m_cur;
        let full = theta.add(&dir);
        let predicted = grad.dot(&dir) + m.weights.majorant_value(&full) - m_cur;
        let mut alpha = ls.initial_step;
        let mut accepted = None;
        for _ in 0..=ls.max_backtracks {
            let cand = theta.axpy(alpha, &dir);
            if let Ok(cand_chol) = cholesky(&cand) {
                let f_cand = p.f_value_factored(&cand, &cand_chol);
                let m_cand = m.weights.majorant_value(&cand);
                if f_cand + m_cand
                    <= psi_cur + ls.armijo_gamma * alpha * predicted + rounding_slack(psi_cur)
                {
                    accepted = Some((cand, cand_chol, f_cand, m_cand));
                    break;
                }
            }
            alpha *= ls.backtrack_factor;
        }
        match accepted {
            Some((cand, cand_chol, f_cand, m_cand)) => {
                let delta = cand.sub(&theta);
                theta = cand;
                chol = cand_chol;
                f_cur = f_cand;
                m_cur = m_cand;
                report.active_set_sizes.push(active.len());
                report.record(f_cur + m_cur + m.tangent_constant, alpha, delta.dot(&delta), started);
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
