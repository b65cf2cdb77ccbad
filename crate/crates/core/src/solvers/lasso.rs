//! Cyclic coordinate descent for weighted-ℓ1 regularized quadratics.
//!
//! The kernel only needs per-coordinate curvature, the current partial
//! derivative of the smooth part and a way to apply a move, so the same loop
//! drives both the dense column subproblem of the Gauss–Seidel solver and the
//! implicitly represented Newton model of the proximal Newton solver.

use crate::matrix::SymMatrix;
use crate::penalty::soft_threshold_scalar;

/// A separable-penalty quadratic model seen one coordinate at a time:
/// minimize `q(x) + Σ w_k |x_k|` with `q` a convex quadratic.
#[allow(clippy::len_without_is_empty)]
pub trait CoordinateModel {
    fn len(&self) -> usize;
    /// Second derivative of `q` along coordinate `k`.
    fn curvature(&self, k: usize) -> f64;
    /// First derivative of `q` along coordinate `k` at the current point.
    fn partial(&self, k: usize) -> f64;
    fn position(&self, k: usize) -> f64;
    fn weight(&self, k: usize) -> f64;
    /// Moves coordinate `k` by `delta`.
    fn shift(&mut self, k: usize, delta: f64);
}

/// Runs up to `passes` cyclic sweeps, stopping early once a sweep moves no
/// coordinate by more than `tol`. Returns the number of sweeps performed.
pub fn coordinate_descent<M: CoordinateModel + ?Sized>(model: &mut M, passes: usize, tol: f64) -> usize {
    for pass in 0..passes {
        let mut largest: f64 = 0.0;
        for k in 0..model.len() {
            let a = model.curvature(k);
            if !(a > 0.0) {
                continue;
            }
            let c = model.position(k);
            let target = soft_threshold_scalar(c - model.partial(k) / a, model.weight(k) / a);
            let delta = target - c;
            if delta != 0.0 {
                model.shift(k, delta);
                largest = largest.max(delta.abs());
            }
        }
        if largest <= tol {
            return pass + 1;
        }
    }
    passes
}

/// `½ xᵀAx + bᵀx + Σ λ_i |x_i|` with `A x` maintained incrementally.
#[derive(Debug, Clone)]
pub struct DenseLasso<'a> {
    a: &'a SymMatrix,
    b: &'a [f64],
    lam: &'a [f64],
    x: Vec<f64>,
    ax: Vec<f64>,
}

impl<'a> DenseLasso<'a> {
    pub fn new(a: &'a SymMatrix, b: &'a [f64], lam: &'a [f64], x0: &[f64]) -> Self {
        let n = a.dim();
        assert!(b.len() == n && lam.len() == n && x0.len() == n, "dimension mismatch");
        let mut ax = vec![0.0; n];
        for (j, &xj) in x0.iter().enumerate() {
            if xj != 0.0 {
                for (o, &aij) in ax.iter_mut().zip(a.row(j)) {
                    *o += aij * xj;
                }
            }
        }
        Self {
            a,
            b,
            lam,
            x: x0.to_vec(),
            ax,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn ax(&self) -> &[f64] {
        &self.ax
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }

    pub fn objective(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.ax)
            .zip(self.b)
            .zip(self.lam)
            .map(|(((x, ax), b), l)| 0.5 * x * ax + b * x + l * x.abs())
            .sum()
    }
}

impl CoordinateModel for DenseLasso<'_> {
    fn len(&self) -> usize {
        self.x.len()
    }

    fn curvature(&self, k: usize) -> f64 {
        self.a.get(k, k)
    }

    fn partial(&self, k: usize) -> f64 {
        self.ax[k] + self.b[k]
    }

    fn position(&self, k: usize) -> f64 {
        self.x[k]
    }

    fn weight(&self, k: usize) -> f64 {
        self.lam[k]
    }

    fn shift(&mut self, k: usize, delta: f64) {
        self.x[k] += delta;
        for (o, &a) in self.ax.iter_mut().zip(self.a.row(k)) {
            *o += delta * a;
        }
    }
}

/// Approximately minimizes `½ xᵀAx + bᵀx + Σ lam_i |x_i|` with `passes`
/// cyclic coordinate-descent sweeps from `x0`.
pub fn weighted_lasso_cd(a: &SymMatrix, b: &[f64], lam: &[f64], x0: &[f64], passes: usize) -> Vec<f64> {
    let mut model = DenseLasso::new(a, b, lam, x0);
    coordinate_descent(&mut model, passes, 0.0);
    model.into_x()
}

pub fn lasso_objective(a: &SymMatrix, b: &[f64], lam: &[f64], x: &[f64]) -> f64 {
    DenseLasso::new(a, b, lam, x).objective()
}
