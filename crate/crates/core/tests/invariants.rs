//! Cross-module structural properties: cone invariance under the certified
//! conditions, similarity of the two closed-loop forms, the constructive
//! and extraction directions of the decoupled equivalence, monotonicity of
//! positive dynamics, and determinism of the stochastic machinery.

mod common;

use common::{assert_spectra_match_smeared, collect_certified, random_cone_point, uniform};
use posobs::fixtures;
use posobs::linalg::{vec_sub, Matrix};
use posobs::model::{
    build_error_dynamics, build_extended_closed_loop, certify, check_invariance_conditions,
    check_stability, GainSet, PositiveSystem,
};
use posobs::rng::Prng;
use posobs::sim::{check_ordering, monte_carlo_mean, simulate_deterministic, NoiseConfig};
use posobs::synthesis::{synth_full, SynthesisMode, SynthesisRequest, SynthesisStatus};

fn cone_ok(point: &[f64], n: usize, tol: f64) -> bool {
    let (x, rest) = point.split_at(n);
    let (e_up, e_low) = rest.split_at(n);
    x.iter().all(|&v| v >= -tol)
        && e_up.iter().all(|&v| v >= -tol)
        && e_low.iter().all(|&v| v >= -tol)
        && x.iter().zip(e_low).all(|(xi, ei)| ei <= &(xi + tol))
}

#[test]
fn one_step_cone_invariance_for_fixture_designs() {
    let mut rng = Prng::new(0x10);
    for (sys, gains) in [fixtures::ex1(), fixtures::ex2()] {
        let report = check_invariance_conditions(&sys, &gains, 0.0).unwrap();
        assert_eq!(report.invariance_ok(), Some(true));
        let (g, _) = build_error_dynamics(&sys, &gains).unwrap();
        let n = sys.n();
        for _ in 0..1000 {
            let point = random_cone_point(&mut rng, n);
            let image = g.mul_vec(&point);
            assert!(cone_ok(&image, n, 1e-9), "cone exit at {point:?}");
        }
    }
}

#[test]
fn extended_and_error_forms_are_similar() {
    let designs = {
        let mut d = vec![fixtures::ex1(), fixtures::ex2(), fixtures::ex3()];
        d.extend(collect_certified(0x11, 5, 40));
        d
    };
    for (sys, gains) in designs {
        let ext = build_extended_closed_loop(&sys, &gains).unwrap();
        let (g, _) = build_error_dynamics(&sys, &gains).unwrap();
        let ext_eigs = ext.eigenvalues().unwrap();
        let g_eigs = g.eigenvalues().unwrap();
        assert_spectra_match_smeared(&ext_eigs, &g_eigs);
        // union of the three diagonal blocks of the error form
        let n = sys.n();
        let block = |r0: usize| Matrix::from_fn(n, n, |i, j| g[(r0 + i, r0 + j)]);
        let mut union = block(0).eigenvalues().unwrap();
        union.extend(block(n).eigenvalues().unwrap());
        union.extend(block(2 * n).eigenvalues().unwrap());
        assert_spectra_match_smeared(&g_eigs, &union);
    }
}

#[test]
fn decoupled_construction_always_certifies() {
    // From any K with A + BK >= 0 Schur and L with A - LC >= 0 Schur and
    // LC >= 0, the gain set (L, L, 0, K) passes every check.
    let mut rng = Prng::new(0x12);
    for _ in 0..25 {
        let n = 2 + (rng.next_u64() % 3) as usize;
        let raw = Matrix::from_fn(n, n, |_, _| rng.next_f64());
        let rho = raw.spectral_radius().unwrap().max(1e-6);
        let a = raw.scale(uniform(&mut rng, 0.5, 1.4) / rho);
        let sys = PositiveSystem::new(a.clone(), Matrix::identity(n), Matrix::identity(n)).unwrap();
        // K shrinks A toward a Schur nonnegative target; L = theta A keeps
        // A - LC = (1 - theta) A nonnegative and Schur, with LC = L >= 0.
        let target = a.scale(uniform(&mut rng, 0.1, 0.85) / a.spectral_radius().unwrap());
        let k = target.sub(&a);
        let rho_a = a.spectral_radius().unwrap();
        let theta_min = (1.0 - 0.9 / rho_a).max(0.0);
        let theta = uniform(&mut rng, theta_min, 1.0);
        let l = a.scale(theta);
        let gains = GainSet::new(l.clone(), l, Matrix::zeros(n, n), k);
        let report = certify(&sys, &gains, 1e-9).unwrap();
        assert_eq!(report.invariance_ok(), Some(true));
        assert_eq!(report.stability_ok(), Some(true));
    }
}

#[test]
fn certified_designs_with_nonneg_lc_extract_single_pair() {
    // Any certified design with L_lower C >= 0 yields (K, L) =
    // (K_upper + K_lower, L_lower) satisfying the five decoupled
    // requirements.
    let designs: Vec<(PositiveSystem, GainSet)> = (0..8)
        .map(|i| {
            let n = 2 + (i % 3);
            let mut rng = Prng::new(0x13 + i as u64);
            let raw = Matrix::from_fn(n, n, |_, _| rng.next_f64());
            let rho = raw.spectral_radius().unwrap().max(1e-6);
            let a = raw.scale(uniform(&mut rng, 0.5, 1.3) / rho);
            let sys = PositiveSystem::new(a, Matrix::identity(n), Matrix::identity(n)).unwrap();
            let req = SynthesisRequest {
                mode: SynthesisMode::Thm1,
                ..Default::default()
            };
            let res = synth_full(&sys, &req).unwrap();
            assert_eq!(res.status, SynthesisStatus::Feasible);
            (sys, res.gains.unwrap())
        })
        .collect();
    for (sys, gains) in designs {
        let llc = gains.l_lower.matmul(sys.c());
        assert!(llc.min_entry() >= -1e-9, "precondition L_lower C >= 0");
        let k = gains.k_upper.add(&gains.k_lower);
        let cl = sys.a().add(&sys.b().matmul(&k));
        let obs = sys.a().sub(&llc);
        assert!(cl.min_entry() >= -1e-9);
        assert!(obs.min_entry() >= -1e-9);
        assert!(cl.spectral_radius().unwrap() < 1.0);
        assert!(obs.spectral_radius().unwrap() < 1.0);
    }
}

#[test]
fn monotone_dynamics_preserve_initial_ordering() {
    let mut rng = Prng::new(0x14);
    for _ in 0..30 {
        let n = 1 + (rng.next_u64() % 4) as usize;
        let a = Matrix::from_fn(n, n, |_, _| 0.6 * rng.next_f64());
        let b: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let above: Vec<f64> = b.iter().map(|&v| v + rng.next_f64()).collect();
        let mut hi = above;
        let mut lo = b;
        for _ in 0..50 {
            for (h, l) in hi.iter().zip(&lo) {
                assert!(h >= l);
            }
            hi = a.mul_vec(&hi);
            lo = a.mul_vec(&lo);
        }
    }
}

#[test]
fn certified_designs_keep_ordering_over_long_horizons() {
    let designs = collect_certified(0x15, 50, 250);
    let mut rng = Prng::new(0x16);
    for (sys, gains) in designs {
        let n = sys.n();
        let x0: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let xu0: Vec<f64> = x0.iter().map(|&v| v + rng.next_f64()).collect();
        let xl0: Vec<f64> = x0.iter().map(|&v| v * rng.next_f64()).collect();
        let tr = simulate_deterministic(&sys, &gains, &x0, &xu0, &xl0, 500).unwrap();
        assert!(
            check_ordering(&tr, 1e-9).is_none(),
            "ordering violated for a certified design"
        );
    }
}

#[test]
fn ensemble_mean_respects_one_step_expectation() {
    // Linearity of expectation: the ensemble mean one step ahead matches
    // the closed-loop map applied to the current ensemble mean plus the
    // unit-mean noise bias, within sampling error.
    let (sys, gains) = fixtures::scalar_noisy();
    let cfg = NoiseConfig::for_system(&sys, 23).unwrap();
    let x0 = [0.4];
    let xu0 = [0.9];
    let xl0 = [0.1];
    let mc = monte_carlo_mean(&sys, &gains, &x0, &xu0, &xl0, 40, 2000, &cfg).unwrap();
    let e1 = sys.e_ones();
    for t in [5usize, 20, 39] {
        let s = &mc.mean.steps[t];
        let next = &mc.mean.steps[t + 1];
        let u = gains.k_lower[(0, 0)] * s.x_lower[0] + gains.k_upper[(0, 0)] * s.x_upper[0];
        let predicted = sys.a()[(0, 0)] * s.x[0] + sys.b()[(0, 0)] * u + e1[0];
        let se = mc.std_error.steps[t + 1].x[0];
        let gap = (next.x[0] - predicted).abs();
        assert!(
            gap <= 5.0 * se + 1e-12,
            "one-step expectation gap {gap} vs 5 se {}",
            5.0 * se
        );
    }
}

#[test]
fn ensemble_means_are_bit_identical_across_calls() {
    let (sys, gains) = fixtures::scalar_noisy();
    let cfg = NoiseConfig::for_system(&sys, 99).unwrap();
    let x0 = [0.3];
    let xu0 = [0.8];
    let xl0 = [0.0];
    let a = monte_carlo_mean(&sys, &gains, &x0, &xu0, &xl0, 50, 200, &cfg).unwrap();
    let b = monte_carlo_mean(&sys, &gains, &x0, &xu0, &xl0, 50, 200, &cfg).unwrap();
    for (s, t) in a.mean.steps.iter().zip(&b.mean.steps) {
        assert_eq!(s.x, t.x);
        assert_eq!(s.x_upper, t.x_upper);
        assert_eq!(s.x_lower, t.x_lower);
    }
}

#[test]
fn fixed_point_residual_is_tiny_for_certified_noisy_designs() {
    let (sys, gains) = fixtures::scalar_noisy();
    let fp = posobs::sim::expected_fixed_point(&sys, &gains).unwrap();
    let (g, bias) = build_error_dynamics(&sys, &gains).unwrap();
    let gxe = g.mul_vec(&fp.error_coords);
    let residual: f64 = vec_sub(&vec_sub(&fp.error_coords, &gxe), &bias)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()));
    assert!(residual <= 1e-10);
}

#[test]
fn stability_check_consistent_on_fixtures() {
    for (sys, gains) in [fixtures::ex1(), fixtures::ex2(), fixtures::ex3()] {
        let report = check_stability(&sys, &gains).unwrap();
        let r = report.radii.unwrap();
        assert!(r.rho_ext.is_finite());
    }
}
