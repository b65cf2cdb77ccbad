//! Linear algebra, penalty and subproblem checks against independent
//! brute-force or analytic oracles.

mod common;

use common::{max_abs_diff, random_spd, well_conditioned_spd};
use proptest::prelude::*;
use reweighted_glasso::matrix::{finite_diff_grad, fro_dist, fro_norm, spd_inverse};
use reweighted_glasso::penalty::{soft_threshold_scalar, WeightField};
use reweighted_glasso::rng::SeededRng;
use reweighted_glasso::solvers::{lasso_objective, weighted_lasso_cd, DenseLasso, CoordinateModel};
use reweighted_glasso::{cholesky, GlassoProblem, Penalty, PenaltyKind, SymMatrix};

fn spd_from(d: usize, a: &[f64]) -> SymMatrix {
    SymMatrix::from_fn(d, |i, j| {
        let dot: f64 = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
        dot + if i == j { 0.1 } else { 0.0 }
    })
}

fn spd_strategy(dims: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = SymMatrix> {
    dims.prop_flat_map(|d| prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |a| spd_from(d, &a)))
}

// Characteristic polynomial by Faddeev–LeVerrier; coefficients low to high,
// monic.
fn char_poly(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let a = m.as_slice();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = vec![0.0; n * n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1}·I
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = (0..n).map(|l| a[i * n + l] * mk[l * n + j]).sum::<f64>();
            }
            next[i * n + i] += c[n - k + 1];
        }
        mk = next;
        let tr: f64 = (0..n)
            .map(|i| (0..n).map(|l| a[i * n + l] * mk[l * n + i]).sum::<f64>())
            .sum();
        c[n - k] = -tr / k as f64;
    }
    c
}

#[derive(Clone, Copy, Debug)]
struct C(f64, f64);

impl C {
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C) -> C {
        let den = o.0 * o.0 + o.1 * o.1;
        C((self.0 * o.0 + self.1 * o.1) / den, (self.1 * o.0 - self.0 * o.1) / den)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
}

// All roots of a monic polynomial by Durand–Kerner iteration.
fn poly_roots(c: &[f64]) -> Vec<C> {
    let n = c.len() - 1;
    let eval = |z: C| c.iter().rev().fold(C(0.0, 0.0), |acc, &k| acc.mul(z).add(C(k, 0.0)));
    let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = C(0.4, 0.9);
    let mut z: Vec<C> = (0..n)
        .map(|i| {
            let mut p = C(1.0, 0.0);
            for _ in 0..=i {
                p = p.mul(seed);
            }
            C(p.0 * radius, p.1 * radius)
        })
        .collect();
    for _ in 0..5000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den = C(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den = den.mul(z[i].sub(z[j]));
                }
            }
            let step = eval(z[i]).div(den);
            z[i] = z[i].sub(step);
            moved = moved.max(step.abs());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    z
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cholesky_reconstructs_random_spd(m in spd_strategy(2..=20)) {
        let f = cholesky(&m).expect("A·Aᵀ + 0.1·I is positive definite");
        let rel = fro_dist(&f.reconstruct(), &m) / fro_norm(&m);
        prop_assert!(rel < 1e-10, "relative reconstruction error {}", rel);
        prop_assert!((0..m.dim()).all(|i| f.lower(i, i) > 0.0));
    }

    #[test]
    fn inverse_times_matrix_is_identity(m in spd_strategy(2..=20)) {
        let inv = spd_inverse(&cholesky(&m).unwrap());
        let prod = SymMatrix::symmetrize(m.dim(), &inv.matmul(&m));
        let dev = max_abs_diff(&prod, &SymMatrix::identity(m.dim()));
        prop_assert!(dev < 1e-8, "max deviation from identity {}", dev);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn log_det_matches_characteristic_roots(m in spd_strategy(1..=5)) {
        let roots = poly_roots(&char_poly(&m));
        for r in &roots {
            prop_assert!(r.1.abs() < 1e-6 * (1.0 + r.0.abs()), "non-real root {:?}", r);
            prop_assert!(r.0 > 0.0);
        }
        let oracle: f64 = roots.iter().map(|r| r.0.ln()).sum();
        let ld = cholesky(&m).unwrap().log_det();
        prop_assert!((ld - oracle).abs() <= 1e-8 * ld.abs().max(1.0), "{} vs {}", ld, oracle);
        let trace: f64 = roots.iter().map(|r| r.0).sum();
        prop_assert!((trace - m.trace()).abs() < 1e-9 * m.trace());
    }

    #[test]
    fn soft_threshold_matches_grid_prox(x in -4.0f64..4.0, lam in 0.0f64..2.0, step in 0.1f64..2.0) {
        let h = 1e-4;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let u = -5.0 + k as f64 * h;
            let v = 0.5 * (u - x) * (u - x) + step * lam * u.abs();
            if v < best.0 {
                best = (v, u);
            }
        }
        let w = WeightField::uniform(1, lam, true);
        let st = w.soft_threshold(&SymMatrix::from_diag(&[x]), step).get(0, 0);
        prop_assert!((st - best.1).abs() <= h, "{} vs grid {}", st, best.1);
        prop_assert_eq!(st, soft_threshold_scalar(x, step * lam));
    }

    #[test]
    fn scalar_majorization_and_tangency(u0 in 0.0f64..10.0, u in 0.0f64..10.0, k in 0usize..4) {
        let p = Penalty::with_defaults(PenaltyKind::ALL[k], 0.7).unwrap();
        let (phi0, w0) = (p.phi(u0).unwrap(), p.weight(u0).unwrap());
        prop_assert!(p.phi(u).unwrap() <= phi0 + w0 * (u - u0) + 1e-12);
        prop_assert_eq!(phi0 + w0 * (u0 - u0), phi0);
    }

    #[test]
    fn reweight_is_symmetric_and_non_negative(m in spd_strategy(2..=8), zero_row in 0usize..8, k in 0usize..4, diag in any::<bool>()) {
        let d = m.dim();
        let mut theta = m.scaled(-1.0);
        let r = zero_row % d;
        for j in 0..d {
            theta.set(r, j, 0.0);
        }
        let p = Penalty::new(PenaltyKind::ALL[k], 0.5, PenaltyKind::ALL[k].default_epsilon(), diag).unwrap();
        let w = p.reweight(&theta);
        for i in 0..d {
            for j in 0..d {
                prop_assert_eq!(w.get(i, j), w.get(j, i));
                prop_assert!(w.get(i, j) >= 0.0);
            }
            if !diag {
                prop_assert_eq!(w.get(i, i), 0.0);
            }
        }
    }
}

#[test]
fn weights_are_monotone() {
    let grid: Vec<f64> = (0..2000).map(|k| k as f64 * 0.005).collect();
    for kind in [PenaltyKind::LogSum, PenaltyKind::LHalf] {
        let p = Penalty::with_defaults(kind, 1.3).unwrap();
        for w in grid.windows(2) {
            assert!(p.weight(w[1]).unwrap() < p.weight(w[0]).unwrap(), "{kind} at {}", w[1]);
        }
    }
    let mcp = Penalty::with_defaults(PenaltyKind::Mcp, 1.3).unwrap();
    for w in grid.windows(2) {
        assert!(mcp.weight(w[1]).unwrap() <= mcp.weight(w[0]).unwrap());
        if w[1] >= 1.3 * 3.0 {
            assert_eq!(mcp.weight(w[1]).unwrap(), 0.0);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = SeededRng::new(2024, 0);
    for n in 0..50 {
        let d = 2 + n % 5;
        let s = random_spd(&mut rng, d);
        let theta = well_conditioned_spd(&mut rng, d);
        let p = GlassoProblem::new(s, Penalty::l1(0.1)).unwrap();
        let fd = finite_diff_grad(|m| p.f_value(m).unwrap_or(f64::NAN), &theta, 1e-5).unwrap();
        let g = p.f_grad(&cholesky(&theta).unwrap());
        // symmetric-pair probes see each off-diagonal entry twice
        let expected = SymMatrix::from_fn(d, |i, j| if i == j { g.get(i, j) } else { 2.0 * g.get(i, j) });
        let err = max_abs_diff(&fd, &expected);
        assert!(err < 1e-5, "instance {n}: max error {err}");
    }
}

#[test]
fn psi_is_permutation_invariant() {
    let mut rng = SeededRng::new(5, 0);
    for _ in 0..20 {
        let d = 5;
        let s = random_spd(&mut rng, d);
        let theta = well_conditioned_spd(&mut rng, d);
        let perm = [3, 0, 4, 1, 2];
        for kind in PenaltyKind::ALL {
            let pen = Penalty::with_defaults(kind, 0.4).unwrap();
            let a = GlassoProblem::new(s.clone(), pen).unwrap().psi_value(&theta).unwrap();
            let b = GlassoProblem::new(s.permuted(&perm), pen)
                .unwrap()
                .psi_value(&theta.permuted(&perm))
                .unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{kind}: {a} vs {b}");
        }
    }
}

#[test]
fn majorant_bounds_objective_on_random_points() {
    let mut rng = SeededRng::new(77, 0);
    for kind in PenaltyKind::ALL {
        for n in 0..1000 {
            let d = 2 + n % 5;
            let s = random_spd(&mut rng, d);
            let p = GlassoProblem::new(s, Penalty::with_defaults(kind, rng.uniform_in(0.05, 2.0)).unwrap()).unwrap();
            let anchor = random_spd(&mut rng, d).scaled(0.5);
            let theta = random_spd(&mut rng, d);
            let m = p.make_majorant(&anchor).unwrap();
            let at_anchor = p.majorant_psi(&m, &anchor).unwrap();
            let psi_anchor = p.psi_value(&anchor).unwrap();
            assert!((at_anchor - psi_anchor).abs() <= 1e-9 * psi_anchor.abs().max(1.0));
            assert!(p.majorant_psi(&m, &theta).unwrap() >= p.psi_value(&theta).unwrap() - 1e-9);
        }
    }
}

// Brute-force minimum of the lasso objective: a coarse grid over [−5, 5]³,
// then repeated zooming grids around the incumbent.
fn lasso_grid_minimum(a: &SymMatrix, b: &[f64], lam: &[f64]) -> f64 {
    let obj = |x: &[f64]| lasso_objective(a, b, lam, x);
    let mut best = (f64::INFINITY, [0.0; 3]);
    let n = 200;
    let h = 10.0 / n as f64;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let x = [-5.0 + i as f64 * h, -5.0 + j as f64 * h, -5.0 + k as f64 * h];
                let v = obj(&x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
    }
    let mut h = h;
    while h > 1e-12 {
        let c = best.1;
        for i in -10..=10 {
            for j in -10..=10 {
                for k in -10..=10 {
                    let x = [c[0] + i as f64 * h, c[1] + j as f64 * h, c[2] + k as f64 * h];
                    let v = obj(&x);
                    if v < best.0 {
                        best = (v, x);
                    }
                }
            }
        }
        h /= 4.0;
    }
    best.0
}

#[test]
fn weighted_lasso_matches_grid_oracle() {
    let mut rng = SeededRng::new(31, 0);
    for _ in 0..5 {
        // λ_min(A) ≥ 1.1 keeps the minimizer inside the box
        let a = random_spd(&mut rng, 3).add(&SymMatrix::identity(3));
        let b: Vec<f64> = (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let lam = [0.3; 3];
        let x = weighted_lasso_cd(&a, &b, &lam, &[0.0; 3], 100);
        let cd = lasso_objective(&a, &b, &lam, &x);
        let oracle = lasso_grid_minimum(&a, &b, &lam);
        assert!(x.iter().all(|v| v.abs() < 5.0), "minimizer outside the oracle box: {x:?}");
        assert!((cd - oracle).abs() < 1e-8, "coordinate descent {cd} vs oracle {oracle}");
    }
}

#[test]
fn lasso_objective_never_increases_per_pass() {
    let mut rng = SeededRng::new(8, 0);
    for _ in 0..50 {
        let d = 2 + (rng.uniform() * 8.0) as usize;
        let a = random_spd(&mut rng, d);
        let b: Vec<f64> = (0..d).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        let lam: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.0, 1.0)).collect();
        let x0: Vec<f64> = (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut model = DenseLasso::new(&a, &b, &lam, &x0);
        let mut prev = model.objective();
        for _ in 0..30 {
            reweighted_glasso::solvers::coordinate_descent(&mut model, 1, 0.0);
            let cur = model.objective();
            assert!(cur <= prev + 1e-12 * (1.0 + prev.abs()), "{cur} > {prev}");
            prev = cur;
        }
        assert_eq!(model.len(), d);
    }
}
