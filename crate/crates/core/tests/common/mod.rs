//! Shared helpers for the integration suites: random system generation,
//! certified-design collection, an independent brute-force LP oracle and a
//! spectra matcher. Each test target uses its own subset.
#![allow(dead_code)]

use num_complex::Complex64;
use posobs::linalg::Matrix;
use posobs::lp::{lp_solve, LpOutcome, LpProblem};
use posobs::model::{GainSet, PositiveSystem};
use posobs::rng::Prng;
use posobs::synthesis::{synth_full, SynthesisRequest, SynthesisStatus};

pub fn uniform(rng: &mut Prng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

/// Random positive plant with identity input map and a single mixed-sign
/// output row; the open-loop spectral radius is drawn from [0.3, 1.2].
pub fn random_system(rng: &mut Prng) -> PositiveSystem {
    let n = 2 + (rng.next_u64() % 3) as usize;
    let raw = Matrix::from_fn(n, n, |_, _| rng.next_f64());
    let rho = raw.spectral_radius().unwrap().max(1e-3);
    let target = uniform(rng, 0.3, 1.2);
    let a = raw.scale(target / rho);
    let c = Matrix::from_fn(1, n, |_, _| uniform(rng, -1.0, 1.0));
    PositiveSystem::new(a, Matrix::identity(n), c).unwrap()
}

/// Draw random systems and keep those for which coupled synthesis returns
/// a certified design. Panics when `want` designs cannot be collected in
/// `max_attempts` draws, so a generator regression is loud.
pub fn collect_certified(
    seed: u64,
    want: usize,
    max_attempts: usize,
) -> Vec<(PositiveSystem, GainSet)> {
    let mut rng = Prng::new(seed);
    let mut out = Vec::with_capacity(want);
    for _ in 0..max_attempts {
        if out.len() == want {
            break;
        }
        let sys = random_system(&mut rng);
        let res = synth_full(&sys, &SynthesisRequest::default()).unwrap();
        if res.status == SynthesisStatus::Feasible {
            out.push((sys, res.gains.unwrap()));
        }
    }
    assert_eq!(
        out.len(),
        want,
        "only {} certified designs in {} attempts",
        out.len(),
        max_attempts
    );
    out
}

/// maximize c . x over a . x <= b rows inside the box [0, hi]^n.
#[derive(Clone, Debug)]
pub struct BoxLp {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub hi: f64,
}

/// Random feasible bounded LP: the origin satisfies every row.
pub fn random_box_lp(rng: &mut Prng) -> BoxLp {
    let n = 1 + (rng.next_u64() % 4) as usize;
    let n_rows = 1 + (rng.next_u64() % 8) as usize;
    let objective: Vec<f64> = (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let rows: Vec<(Vec<f64>, f64)> = (0..n_rows)
        .map(|_| {
            let coeffs: Vec<f64> = (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect();
            let rhs = uniform(rng, 0.0, 4.0);
            (coeffs, rhs)
        })
        .collect();
    BoxLp {
        objective,
        rows,
        hi: 10.0,
    }
}

pub fn solve_box_lp(lp: &BoxLp) -> LpOutcome {
    let n = lp.objective.len();
    let mut p = LpProblem::new(n);
    p.maximize(lp.objective.clone());
    for (coeffs, rhs) in &lp.rows {
        p.add_leq(coeffs.clone(), *rhs);
    }
    for i in 0..n {
        p.set_bounds(i, Some(0.0), Some(lp.hi));
    }
    lp_solve(&p).unwrap()
}

/// Independent oracle: enumerate every vertex as the intersection of n
/// hyperplanes drawn from the rows and box faces, keep the feasible ones,
/// and take the best objective.
pub fn brute_force_box_lp(lp: &BoxLp) -> f64 {
    let n = lp.objective.len();
    // hyperplanes as (normal, offset): normal . x = offset
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (coeffs, rhs) in &lp.rows {
        planes.push((coeffs.clone(), *rhs));
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, lp.hi));
    }
    let mut best = f64::NEG_INFINITY;
    let mut chosen = vec![0usize; n];
    enumerate_subsets(planes.len(), n, 0, 0, &mut chosen, &mut |subset| {
        let m = Matrix::from_fn(n, n, |r, c| planes[subset[r]].0[c]);
        let b = Matrix::column(&subset.iter().map(|&s| planes[s].1).collect::<Vec<_>>());
        let Ok(x) = m.solve(&b) else {
            return;
        };
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let feasible = x.iter().all(|&v| (-1e-9..=lp.hi + 1e-9).contains(&v))
            && lp.rows.iter().all(|(coeffs, rhs)| {
                coeffs.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() <= rhs + 1e-9
            });
        if feasible {
            let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            if obj > best {
                best = obj;
            }
        }
    });
    best
}

fn enumerate_subsets(
    total: usize,
    k: usize,
    start: usize,
    depth: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(chosen);
        return;
    }
    for i in start..total {
        chosen[depth] = i;
        enumerate_subsets(total, k, i + 1, depth + 1, chosen, visit);
    }
}

/// Multiset matching with tolerances that honor the polynomial route's
/// smearing of repeated or near-zero eigenvalue clusters: clusters of an
/// m-fold root are only determined to roughly eps^(1/m), and deadbeat
/// blocks leave a fuzz ball of magnitude up to ~1e-4 around the origin.
pub fn assert_spectra_match_smeared(a: &[Complex64], b: &[Complex64]) {
    assert_eq!(a.len(), b.len(), "spectra sizes differ");
    let mut remaining = b.to_vec();
    for z in a {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .expect("non-empty");
        let w = remaining[idx];
        let tol = if z.norm().min(w.norm()) < 2e-2 {
            5e-3
        } else {
            2e-5
        };
        assert!(
            dist <= tol,
            "eigenvalue {z} unmatched (nearest at {dist:.3e})"
        );
        remaining.remove(idx);
    }
}

/// Sample a point of the error cone: x, e_up, e_low >= 0 with e_low <= x.
pub fn random_cone_point(rng: &mut Prng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let e_up: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let e_low: Vec<f64> = x.iter().map(|&xi| xi * rng.next_f64()).collect();
    let mut out = Vec::with_capacity(3 * n);
    out.extend(x);
    out.extend(e_up);
    out.extend(e_low);
    out
}
