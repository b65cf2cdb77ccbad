//! Instance generators shared by the integration suites.
#![allow(dead_code)]

use reweighted_glasso::experiments::empirical_covariance;
use reweighted_glasso::rng::SeededRng;
use reweighted_glasso::SymMatrix;

/// `A·Aᵀ + 0.1·I` with `A` uniform in `[−1, 1]`.
pub fn random_spd(rng: &mut SeededRng, d: usize) -> SymMatrix {
    let a: Vec<f64> = (0..d * d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    SymMatrix::from_fn(d, |i, j| {
        let dot: f64 = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
        dot + if i == j { 0.1 } else { 0.0 }
    })
}

/// `I + 0.4·B/d` with `B` symmetric uniform in `[−1, 1]`; eigenvalues lie
/// in `[0.6, 1.4]` by Gershgorin, so the condition number is below 2.5.
pub fn well_conditioned_spd(rng: &mut SeededRng, d: usize) -> SymMatrix {
    let mut m = SymMatrix::identity(d);
    for i in 0..d {
        for j in i..d {
            let v = m.get(i, j) + 0.4 * rng.uniform_in(-1.0, 1.0) / d as f64;
            m.set(i, j, v);
        }
    }
    m
}

/// Empirical covariance of `n` Gaussian draws with a random correlated
/// mixing, rescaled to unit mean diagonal.
pub fn random_covariance(rng: &mut SeededRng, d: usize, n: usize) -> SymMatrix {
    let mix: Vec<f64> = (0..d * d)
        .map(|k| if k % (d + 1) == 0 { 1.0 } else { 0.5 * rng.normal() / (d as f64).sqrt() })
        .collect();
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            (0..d).map(|i| (0..d).map(|k| mix[i * d + k] * z[k]).sum()).collect()
        })
        .collect();
    let s = empirical_covariance(&samples);
    let scale = s.trace() / d as f64;
    s.scaled(1.0 / scale)
}

pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.sub(b).max_abs()
}
