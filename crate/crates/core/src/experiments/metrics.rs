//! Support recovery and estimation error.

use serde::Serialize;
use thiserror::Error;

use crate::matrix::{fro_dist, fro_norm, SymMatrix};

/// Default binarization threshold for support comparisons.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricPair {
    pub f1: f64,
    pub nmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("ground truth is the zero matrix")]
pub struct ZeroTruth;

/// F1 score of the strict upper-triangle support `|entry| > tol`.
/// Both supports empty gives 1; exactly one empty gives 0.
pub fn f1_support(theta_hat: &SymMatrix, theta_true: &SymMatrix, tol: f64) -> f64 {
    assert_eq!(theta_hat.dim(), theta_true.dim(), "dimension mismatch");
    let d = theta_hat.dim();
    let (mut tp, mut n_hat, mut n_true) = (0usize, 0usize, 0usize);
    for i in 0..d {
        for j in (i + 1)..d {
            let h = theta_hat.get(i, j).abs() > tol;
            let t = theta_true.get(i, j).abs() > tol;
            n_hat += h as usize;
            n_true += t as usize;
            tp += (h && t) as usize;
        }
    }
    match (n_hat, n_true) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => 2.0 * tp as f64 / (n_hat + n_true) as f64,
    }
}

/// `‖Θ̂ − Θ‖²_F / ‖Θ‖²_F`
pub fn nmse(theta_hat: &SymMatrix, theta_true: &SymMatrix) -> Result<f64, ZeroTruth> {
    let denom = fro_norm(theta_true).powi(2);
    if denom == 0.0 {
        return Err(ZeroTruth);
    }
    Ok(fro_dist(theta_hat, theta_true).powi(2) / denom)
}

pub fn metric_pair(theta_hat: &SymMatrix, theta_true: &SymMatrix, tol: f64) -> Result<MetricPair, ZeroTruth> {
    Ok(MetricPair {
        f1: f1_support(theta_hat, theta_true, tol),
        nmse: nmse(theta_hat, theta_true)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_offdiag(d: usize, entries: &[(usize, usize)]) -> SymMatrix {
        let mut m = SymMatrix::identity(d);
        for &(i, j) in entries {
            m.set(i, j, 0.5);
        }
        m
    }

    #[test]
    fn f1_examples() {
        let t = with_offdiag(3, &[(0, 1)]);
        assert_eq!(f1_support(&t, &t, 1e-8), 1.0);

        let dense = SymMatrix::from_fn(3, |_, _| 1.0);
        assert_eq!(f1_support(&dense, &SymMatrix::identity(3), 1e-8), 0.0);
        assert_eq!(f1_support(&SymMatrix::identity(3), &t, 1e-8), 0.0);
        assert_eq!(f1_support(&SymMatrix::identity(3), &SymMatrix::identity(3), 1e-8), 1.0);

        let est = with_offdiag(3, &[(0, 1), (0, 2)]);
        assert!((f1_support(&est, &t, 1e-8) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn f1_ignores_entries_below_tolerance() {
        let t = with_offdiag(3, &[(0, 1)]);
        let mut est = t.clone();
        est.set(1, 2, 1e-10);
        assert_eq!(f1_support(&est, &t, 1e-8), 1.0);
    }

    #[test]
    fn nmse_examples() {
        let t = with_offdiag(3, &[(1, 2)]);
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        assert_eq!(nmse(&SymMatrix::zeros(3), &t).unwrap(), 1.0);
        assert!((nmse(&t.scaled(2.0), &t).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(nmse(&t, &SymMatrix::zeros(3)), Err(ZeroTruth));
    }
}
