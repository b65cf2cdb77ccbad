//! Synthetic sparse precision matrices and Gaussian samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{cholesky, NotPd, SymMatrix};
use crate::rng::{streams, SeededRng};

/// Magnitude range of the nonzero strictly-lower factor entries.
pub const FACTOR_MAGNITUDE: (f64, f64) = (0.6, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dim: usize,
    /// Probability that a strictly-lower entry of the unit lower-triangular
    /// factor is zero.
    pub sparsity: f64,
    #[serde(default = "default_diag_boost")]
    pub diag_boost: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_diag_boost() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("sparsity must lie in [0, 1), got {0}")]
    Sparsity(f64),
    #[error("diag_boost must be a non-negative number, got {0}")]
    DiagBoost(f64),
    #[error("n_samples must be at least 1")]
    Samples,
}

impl SyntheticSpec {
    pub fn benchmark_default(seed: u64) -> Self {
        Self {
            dim: 75,
            sparsity: 0.9,
            diag_boost: 0.1,
            n_samples: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.dim < 2 {
            return Err(SpecError::Dimension(self.dim));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(SpecError::Sparsity(self.sparsity));
        }
        if !(self.diag_boost >= 0.0) || !self.diag_boost.is_finite() {
            return Err(SpecError::DiagBoost(self.diag_boost));
        }
        if self.n_samples == 0 {
            return Err(SpecError::Samples);
        }
        Ok(())
    }
}

/// `Θ = A Aᵀ + c·I` with `A` unit lower triangular. Each strictly-lower entry
/// of `A` is nonzero with probability `1 − sparsity`, with magnitude uniform
/// in [`FACTOR_MAGNITUDE`] and a random sign.
pub fn make_sparse_spd(spec: &SyntheticSpec) -> SymMatrix {
    let d = spec.dim;
    let mut rng = SeededRng::new(spec.seed, streams::PRECISION);
    let keep = 1.0 - spec.sparsity;
    let (lo, hi) = FACTOR_MAGNITUDE;
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        a[i * d + i] = 1.0;
        for j in 0..i {
            if rng.uniform() < keep {
                let magnitude = rng.uniform_in(lo, hi);
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                a[i * d + j] = sign * magnitude;
            }
        }
    }
    SymMatrix::from_fn(d, |i, j| {
        let mut v = 0.0;
        for k in 0..=i.min(j) {
            v += a[i * d + k] * a[j * d + k];
        }
        if i == j {
            v + spec.diag_boost
        } else {
            v
        }
    })
}

/// Fraction of off-diagonal entries that are exactly zero.
pub fn offdiag_zero_fraction(m: &SymMatrix) -> f64 {
    let d = m.dim();
    if d < 2 {
        return 0.0;
    }
    let mut zeros = 0usize;
    for i in 0..d {
        for j in (i + 1)..d {
            if m.get(i, j) == 0.0 {
                zeros += 1;
            }
        }
    }
    zeros as f64 / (d * (d - 1) / 2) as f64
}

/// `n` draws from `N(0, Θ⁻¹)`: `x = L⁻ᵀ z` with `Θ = L Lᵀ` and `z` standard
/// normal.
pub fn draw_samples(theta_true: &SymMatrix, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, NotPd> {
    let chol = cholesky(theta_true)?;
    let d = theta_true.dim();
    let mut rng = SeededRng::new(seed, streams::SAMPLES);
    Ok((0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            chol.solve_upper(&z)
        })
        .collect())
}

/// Uncentered empirical covariance `(1/n) Σ x xᵀ`.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> SymMatrix {
    assert!(!samples.is_empty(), "need at least one sample");
    let d = samples[0].len();
    let mut acc = vec![0.0; d * d];
    for x in samples {
        for i in 0..d {
            let xi = x[i];
            for j in i..d {
                acc[i * d + j] += xi * x[j];
            }
        }
    }
    let n = samples.len() as f64;
    SymMatrix::from_fn(d, |i, j| acc[i * d + j] / n)
}

pub fn sample_and_covariance(theta_true: &SymMatrix, n: usize, seed: u64) -> Result<SymMatrix, NotPd> {
    assert!(n >= 1, "need at least one sample");
    Ok(empirical_covariance(&draw_samples(theta_true, n, seed)?))
}

/// The truth and empirical covariance for one synthetic instance.
pub fn generate(spec: &SyntheticSpec) -> Result<(SymMatrix, SymMatrix), NotPd> {
    let truth = make_sparse_spd(spec);
    let s = sample_and_covariance(&truth, spec.n_samples, spec.seed)?;
    Ok((truth, s))
}
