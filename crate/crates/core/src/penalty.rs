//! Separable composite penalties `g(Θ) = Σ φ(|θ_ij|)` and their tangent
//! majorants.
//!
//! Each `φ` is concave and non-decreasing on `[0, ∞)`, so its tangent at
//! `u₀` lies above it. Linearizing `φ` at the current iterate turns `g` into a
//! weighted ℓ1 norm (plus a constant) whose weights are `φ'(|θ_ij|)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SymMatrix;

pub const DEFAULT_LOG_SUM_EPSILON: f64 = 0.1;
pub const DEFAULT_L_HALF_EPSILON: f64 = 0.1;
pub const DEFAULT_MCP_EPSILON: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PenaltyError {
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("epsilon {epsilon} is invalid for {kind} (requires {requirement})")]
    InvalidEpsilon {
        kind: PenaltyKind,
        epsilon: f64,
        requirement: &'static str,
    },
    #[error("penalty argument must be non-negative, got {0}")]
    Domain(f64),
    #[error("unknown penalty kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    L1,
    LogSum,
    LHalf,
    Mcp,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [Self::L1, Self::LogSum, Self::LHalf, Self::Mcp];

    pub fn name(self) -> &'static str {
        match self {
            Self::L1 => "l1",
            Self::LogSum => "log-sum",
            Self::LHalf => "l-half",
            Self::Mcp => "mcp",
        }
    }

    pub fn default_epsilon(self) -> f64 {
        match self {
            Self::L1 => 0.0,
            Self::LogSum => DEFAULT_LOG_SUM_EPSILON,
            Self::LHalf => DEFAULT_L_HALF_EPSILON,
            Self::Mcp => DEFAULT_MCP_EPSILON,
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = PenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PenaltyError::UnknownKind(s.to_string()))
    }
}

/// A validated penalty: kind, strength `gamma` and shape parameter `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    kind: PenaltyKind,
    gamma: f64,
    epsilon: f64,
    penalize_diagonal: bool,
}

impl Penalty {
    pub fn new(
        kind: PenaltyKind,
        gamma: f64,
        epsilon: f64,
        penalize_diagonal: bool,
    ) -> Result<Self, PenaltyError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(PenaltyError::InvalidGamma(gamma));
        }
        let bad = |requirement| PenaltyError::InvalidEpsilon {
            kind,
            epsilon,
            requirement,
        };
        match kind {
            PenaltyKind::L1 => {}
            PenaltyKind::LogSum | PenaltyKind::LHalf => {
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(bad("epsilon > 0"));
                }
            }
            PenaltyKind::Mcp => {
                if !(epsilon > 1.0) || !epsilon.is_finite() {
                    return Err(bad("epsilon > 1"));
                }
            }
        }
        Ok(Self {
            kind,
            gamma,
            epsilon,
            penalize_diagonal,
        })
    }

    /// Default epsilon for the kind, diagonal penalized.
    pub fn with_defaults(kind: PenaltyKind, gamma: f64) -> Result<Self, PenaltyError> {
        Self::new(kind, gamma, kind.default_epsilon(), true)
    }

    pub fn l1(gamma: f64) -> Self {
        Self::with_defaults(PenaltyKind::L1, gamma).expect("invalid l1 gamma")
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn penalize_diagonal(&self) -> bool {
        self.penalize_diagonal
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, PenaltyError> {
        Self::new(self.kind, gamma, self.epsilon, self.penalize_diagonal)
    }

    /// The same shape with `γ` chosen so that the weight at zero, `φ'(0)`,
    /// equals `lambda0`. Starting from a diagonal iterate this is the weight
    /// every off-diagonal entry gets at the first reweighting, which makes
    /// penalties of different shapes comparable on one grid.
    pub fn with_initial_weight(&self, lambda0: f64) -> Result<Self, PenaltyError> {
        let per_gamma = match self.kind {
            PenaltyKind::L1 | PenaltyKind::Mcp => 1.0,
            PenaltyKind::LogSum => 1.0 / self.epsilon,
            PenaltyKind::LHalf => 1.0 / (2.0 * self.epsilon.sqrt()),
        };
        self.with_gamma(lambda0 / per_gamma)
    }

    /// Scalar penalty `φ(u)` for `u ≥ 0`.
    pub fn phi(&self, u: f64) -> Result<f64, PenaltyError> {
        if !(u >= 0.0) {
            return Err(PenaltyError::Domain(u));
        }
        Ok(self.phi_unchecked(u))
    }

    /// Tangent slope `φ'(u)` for `u ≥ 0`; this is the reweighting weight.
    pub fn weight(&self, u: f64) -> Result<f64, PenaltyError> {
        if !(u >= 0.0) {
            return Err(PenaltyError::Domain(u));
        }
        Ok(self.weight_unchecked(u))
    }

    #[inline]
    pub(crate) fn phi_unchecked(&self, u: f64) -> f64 {
        let (g, e) = (self.gamma, self.epsilon);
        match self.kind {
            PenaltyKind::L1 => g * u,
            PenaltyKind::LogSum => g * (u + e).ln(),
            PenaltyKind::LHalf => g * (u + e).sqrt(),
            // γu minus the Moreau envelope of γ|·| with parameter ε.
            PenaltyKind::Mcp => {
                if u < g * e {
                    g * u - u * u / (2.0 * e)
                } else {
                    0.5 * g * g * e
                }
            }
        }
    }

    #[inline]
    pub(crate) fn weight_unchecked(&self, u: f64) -> f64 {
        let (g, e) = (self.gamma, self.epsilon);
        match self.kind {
            PenaltyKind::L1 => g,
            PenaltyKind::LogSum => g / (u + e),
            PenaltyKind::LHalf => g / (2.0 * (u + e).sqrt()),
            PenaltyKind::Mcp => (g - u / e).max(0.0),
        }
    }

    #[inline]
    fn counts(&self, i: usize, j: usize) -> bool {
        i != j || self.penalize_diagonal
    }

    /// Weights `φ'(|θ_ij|)` at every entry; zero on the diagonal when the
    /// diagonal is not penalized.
    pub fn reweight(&self, theta: &SymMatrix) -> WeightField {
        let weights = SymMatrix::from_fn(theta.dim(), |i, j| {
            if self.counts(i, j) {
                self.weight_unchecked(theta.get(i, j).abs())
            } else {
                0.0
            }
        });
        WeightField { weights }
    }

    /// `Σ_{i,j} φ(|θ_ij|)` over both triangles.
    pub fn value(&self, theta: &SymMatrix) -> f64 {
        let d = theta.dim();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if self.counts(i, j) {
                    total += self.phi_unchecked(theta.get(i, j).abs());
                }
            }
        }
        total
    }

    /// Constant term of the tangent majorant at `anchor`:
    /// `Σ φ(|a_ij|) − φ'(|a_ij|)·|a_ij|`.
    pub fn tangent_constant(&self, anchor: &SymMatrix) -> f64 {
        let d = anchor.dim();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if self.counts(i, j) {
                    let u = anchor.get(i, j).abs();
                    total += self.phi_unchecked(u) - self.weight_unchecked(u) * u;
                }
            }
        }
        total
    }
}

pub fn phi(p: &Penalty, u: f64) -> Result<f64, PenaltyError> {
    p.phi(u)
}

pub fn weight(p: &Penalty, theta_abs: f64) -> Result<f64, PenaltyError> {
    p.weight(theta_abs)
}

pub fn reweight(p: &Penalty, theta: &SymMatrix) -> WeightField {
    p.reweight(theta)
}

pub fn penalty_value(p: &Penalty, theta: &SymMatrix) -> f64 {
    p.value(theta)
}

/// Per-entry non-negative weights of a weighted ℓ1 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    weights: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("weight ({row}, {col}) = {value} is negative or not finite")]
pub struct InvalidWeight {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl WeightField {
    pub fn new(weights: SymMatrix) -> Result<Self, InvalidWeight> {
        let d = weights.dim();
        for i in 0..d {
            for j in i..d {
                let value = weights.get(i, j);
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(InvalidWeight { row: i, col: j, value });
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn uniform(dim: usize, value: f64, include_diagonal: bool) -> Self {
        assert!(value >= 0.0);
        let weights = SymMatrix::from_fn(dim, |i, j| {
            if i != j || include_diagonal {
                value
            } else {
                0.0
            }
        });
        Self { weights }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: SymMatrix::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn as_matrix(&self) -> &SymMatrix {
        &self.weights
    }

    /// `Σ_{i,j} w_ij |θ_ij|`
    pub fn majorant_value(&self, theta: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), theta.dim(), "dimension mismatch");
        self.weights
            .as_slice()
            .iter()
            .zip(theta.as_slice())
            .map(|(w, t)| w * t.abs())
            .sum()
    }

    /// Proximal map of `step · Σ w_ij |·|`: entrywise soft thresholding.
    pub fn soft_threshold(&self, x: &SymMatrix, step: f64) -> SymMatrix {
        assert!(step > 0.0, "step must be positive");
        x.zip_map(&self.weights, |v, w| soft_threshold_scalar(v, step * w))
    }
}

pub fn majorant_value(w: &WeightField, theta: &SymMatrix) -> f64 {
    w.majorant_value(theta)
}

pub fn soft_threshold(w: &WeightField, x: &SymMatrix, step: f64) -> SymMatrix {
    w.soft_threshold(x, step)
}

#[inline]
pub fn soft_threshold_scalar(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}
