//! The penalized Gaussian log-likelihood and its per-reweighting majorant.
//!
//! `f(Θ) = −log det Θ + Tr(SΘ)` is the smooth part, `Ψ = f + g` the full
//! objective, and `Ψ_k = f + m_k + C` the convex surrogate built at an anchor
//! `Θ^k`, where `m_k` is the weighted ℓ1 norm with weights `φ'(|Θ^k_ij|)`.

use thiserror::Error;

use crate::matrix::{cholesky, CholeskyFactor, NotPd, SymMatrix};
use crate::penalty::{Penalty, WeightField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("empirical covariance has a negative diagonal entry at {0}")]
    NegativeDiagonal(usize),
    #[error("empirical covariance contains a non-finite entry")]
    NonFinite,
}

/// An instance of the (possibly non-convex) graphical lasso.
#[derive(Debug, Clone)]
pub struct GlassoProblem {
    s: SymMatrix,
    penalty: Penalty,
}

impl GlassoProblem {
    pub fn new(s: SymMatrix, penalty: Penalty) -> Result<Self, ProblemError> {
        if s.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite);
        }
        if let Some(i) = (0..s.dim()).find(|&i| s.get(i, i) < 0.0) {
            return Err(ProblemError::NegativeDiagonal(i));
        }
        Ok(Self { s, penalty })
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.s
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn with_penalty(&self, penalty: Penalty) -> Self {
        Self {
            s: self.s.clone(),
            penalty,
        }
    }

    /// `f` given an existing factorization of `theta`.
    pub fn f_value_factored(&self, theta: &SymMatrix, chol: &CholeskyFactor) -> f64 {
        -chol.log_det() + self.s.dot(theta)
    }

    pub fn f_value(&self, theta: &SymMatrix) -> Result<f64, NotPd> {
        let chol = cholesky(theta)?;
        Ok(self.f_value_factored(theta, &chol))
    }

    /// `∇f(Θ) = S − Θ⁻¹`
    pub fn f_grad(&self, chol: &CholeskyFactor) -> SymMatrix {
        self.s.sub(&chol.inverse())
    }

    pub fn psi_value(&self, theta: &SymMatrix) -> Result<f64, NotPd> {
        Ok(self.f_value(theta)? + self.penalty.value(theta))
    }

    /// Builds the tangent majorant of the penalty at `anchor`.
    pub fn make_majorant(&self, anchor: &SymMatrix) -> Result<MajorantState, NotPd> {
        cholesky(anchor)?;
        Ok(MajorantState {
            weights: self.penalty.reweight(anchor),
            anchor: anchor.clone(),
            tangent_constant: self.penalty.tangent_constant(anchor),
        })
    }

    pub fn majorant_psi(&self, m: &MajorantState, theta: &SymMatrix) -> Result<f64, NotPd> {
        Ok(self.f_value(theta)? + m.value(theta))
    }

    /// Norm of the minimum-norm element of `∇f(Θ) + ∂m(Θ)`.
    pub fn stationarity_gap(&self, theta: &SymMatrix, m: &MajorantState) -> Result<f64, NotPd> {
        let chol = cholesky(theta)?;
        let g = self.f_grad(&chol);
        Ok(stationarity_residual(&g, theta, &m.weights))
    }
}

pub(crate) fn stationarity_residual(g: &SymMatrix, theta: &SymMatrix, w: &WeightField) -> f64 {
    let d = theta.dim();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (t, gij, lam) = (theta.get(i, j), g.get(i, j), w.get(i, j));
            let r = if t != 0.0 {
                gij + lam * t.signum()
            } else {
                (gij.abs() - lam).max(0.0)
            };
            total += r * r;
        }
    }
    total.sqrt()
}

/// The surrogate `m_k + C` built at an anchor iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantState {
    pub weights: WeightField,
    pub anchor: SymMatrix,
    pub tangent_constant: f64,
}

impl MajorantState {
    /// A pure weighted-ℓ1 surrogate with no anchor constant.
    pub fn from_weights(weights: WeightField, anchor: SymMatrix) -> Self {
        Self {
            weights,
            anchor,
            tangent_constant: 0.0,
        }
    }

    /// `m_k(Θ) + C`
    pub fn value(&self, theta: &SymMatrix) -> f64 {
        self.weights.majorant_value(theta) + self.tangent_constant
    }
}

pub fn f_value(p: &GlassoProblem, theta: &SymMatrix) -> Result<f64, NotPd> {
    p.f_value(theta)
}

pub fn f_grad(p: &GlassoProblem, chol: &CholeskyFactor) -> SymMatrix {
    p.f_grad(chol)
}

pub fn psi_value(p: &GlassoProblem, theta: &SymMatrix) -> Result<f64, NotPd> {
    p.psi_value(theta)
}

pub fn make_majorant(p: &GlassoProblem, anchor: &SymMatrix) -> Result<MajorantState, NotPd> {
    p.make_majorant(anchor)
}

pub fn majorant_psi(p: &GlassoProblem, m: &MajorantState, theta: &SymMatrix) -> Result<f64, NotPd> {
    p.majorant_psi(m, theta)
}

pub fn stationarity_gap(p: &GlassoProblem, theta: &SymMatrix, m: &MajorantState) -> Result<f64, NotPd> {
    p.stationarity_gap(theta, m)
}
