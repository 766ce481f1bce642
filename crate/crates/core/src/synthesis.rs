//! LP-based synthesis of observer and feedback gains.
//!
//! Every program here is a diagonal-scaling linearization: the feedback
//! stage searches over (d, Z) with K = Z diag(d)^-1, the observer stages
//! over (lambda, V) with L = diag(lambda)^-1 V. Nonnegativity of the
//! closed-loop blocks becomes a set of weak rows, Schur stability becomes
//! strict rows through a copositive certificate, and
//! [`crate::lp::lp_feasibility_with_margin`] maximizes the common margin.
//!
//! The coupling row B K_upper + L_lower C >= 0 is bilinear in the scaling
//! and the gains, so the coupled pipeline fixes the observer scaling from a
//! first pass and then solves (K_upper, V) jointly. The pipeline is sound
//! (every feasible answer re-certifies) but not complete: a stage reporting
//! infeasible does not prove that no gains exist, and the result says which
//! stage failed rather than "not stabilizable".

use crate::linalg::{LinalgError, Matrix};
use crate::lp::{self, FeasibilityOutcome, LpError};
use crate::model::{
    self, build_extended_closed_loop, invariance_matrices, ConditionId, ConditionReport, GainSet,
    ModelError, PositiveSystem,
};
use thiserror::Error;

/// Default margin floor for all synthesis LPs.
pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-6;
/// Default upper bound on the scaling variables d and lambda.
pub const DEFAULT_SCALING_BOUND: f64 = 1e4;
/// Default refresh count for the coupled observer/feedback stage.
pub const DEFAULT_REITERATIONS: usize = 3;
/// Feasible results must re-certify with all block radii at or below this.
pub const RECHECK_RADIUS_BOUND: f64 = 1.0 - 1e-6;
/// Elementwise tolerance used by the re-certification.
pub const RECHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("noise model missing: {0}")]
    MissingNoise(&'static str),
    #[error("condition {0:?} is not one of the six invariance conditions")]
    NotInvarianceCondition(ConditionId),
    #[error("coupling rows require a fixed observer scaling")]
    CoupledNeedsLambda,
    #[error("17-series rows require the noise vectors E1 and F1")]
    NoiseRowsNeedNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisMode {
    /// Decoupled design: L C >= 0 on the observer, K_upper = 0.
    Thm1,
    /// Staged coupled design that admits mixed-sign L C and positivization.
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisStage {
    StateFeedback,
    LowerObserver,
    UpperFeedback,
    UpperObserver,
    Recheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisStatus {
    Feasible,
    Infeasible(SynthesisStage),
}

#[derive(Clone, Debug)]
pub struct SynthesisRequest {
    pub mode: SynthesisMode,
    pub include_noise_conditions: bool,
    /// Margin floor epsilon (> 0) below which a stage counts as infeasible.
    pub margin_floor: f64,
    /// Upper bound D (>= 1) on the scaling variables.
    pub scaling_bound: f64,
    /// Extra observer-scaling refresh rounds in coupled mode.
    pub reiterations: usize,
}

impl Default for SynthesisRequest {
    fn default() -> Self {
        Self {
            mode: SynthesisMode::Coupled,
            include_noise_conditions: false,
            margin_floor: DEFAULT_MARGIN_FLOOR,
            scaling_bound: DEFAULT_SCALING_BOUND,
            reiterations: DEFAULT_REITERATIONS,
        }
    }
}

/// A scaling vector together with the LP margin it achieved.
#[derive(Clone, Debug)]
pub struct ScalingCertificate {
    pub scaling: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub status: SynthesisStatus,
    pub gains: Option<GainSet>,
    /// d from the state-feedback stage.
    pub feedback_certificate: Option<ScalingCertificate>,
    /// lambda from the lower-observer stage.
    pub observer_certificate: Option<ScalingCertificate>,
    /// Re-certification of the assembled gains (present whenever gains are).
    pub report: Option<ConditionReport>,
}

impl SynthesisResult {
    fn infeasible(stage: SynthesisStage) -> Self {
        Self {
            status: SynthesisStatus::Infeasible(stage),
            gains: None,
            feedback_certificate: None,
            observer_certificate: None,
            report: None,
        }
    }
}

/// Output of the state-feedback stage: K = Z diag(d)^-1 with
/// A diag(d) + B Z >= 0 and (A + BK) d <= d - t 1.
#[derive(Clone, Debug)]
pub struct FeedbackSynthesis {
    pub k: Matrix,
    pub z: Matrix,
    pub d: Vec<f64>,
    pub margin: f64,
}

/// Find K with A + BK >= 0 and rho(A + BK) < 1, or None when the LP margin
/// cannot reach eps.
pub fn synth_state_feedback(
    a: &Matrix,
    b: &Matrix,
    eps: f64,
    d_max: f64,
) -> Result<Option<FeedbackSynthesis>, SynthesisError> {
    assert!(a.is_square(), "A must be square");
    assert_eq!(b.rows(), a.rows(), "B row count");
    let n = a.rows();
    let m = b.cols();
    let nv = n + m * n;
    let z_idx = |k: usize, j: usize| n + k * n + j;
    let mut weak = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // (A diag d + B Z)_{ij} >= 0
            let mut row = vec![0.0; nv];
            row[j] += a[(i, j)];
            for k in 0..m {
                row[z_idx(k, j)] += b[(i, k)];
            }
            weak.push((row, 0.0));
        }
    }
    let mut strict = Vec::with_capacity(n);
    for i in 0..n {
        // d_i - (A d + B Z 1)_i > 0
        let mut row = vec![0.0; nv];
        row[i] += 1.0;
        for j in 0..n {
            row[j] -= a[(i, j)];
            for k in 0..m {
                row[z_idx(k, j)] -= b[(i, k)];
            }
        }
        strict.push((row, 0.0));
    }
    let mut bounds = vec![(None, None); nv];
    for b in bounds.iter_mut().take(n) {
        *b = (Some(1.0), Some(d_max));
    }
    match lp::lp_feasibility_with_margin(&strict, &weak, &[], &bounds, eps)? {
        FeasibilityOutcome::Infeasible => Ok(None),
        FeasibilityOutcome::Feasible { point, margin } => {
            let d = point[..n].to_vec();
            let z = Matrix::from_fn(m, n, |k, j| point[z_idx(k, j)]);
            let k = Matrix::from_fn(m, n, |k_, j| z[(k_, j)] / d[j]);
            Ok(Some(FeedbackSynthesis { k, z, d, margin }))
        }
    }
}

/// Optional rows for the observer-gain program.
#[derive(Clone, Debug, Default)]
pub struct ObserverOptions {
    /// L C >= 0 (decouples the design from the feedback gains).
    pub require_lc_nonneg: bool,
    /// L F1 - E1 >= 0 (upper-estimate noise condition).
    pub require_17a: bool,
    /// E1 - L F1 >= 0 and L F1 >= 0 (lower-estimate noise conditions).
    pub require_17bc: bool,
    /// Fixed B K_upper block for the coupling row
    /// diag(lambda) B K_upper + V C >= 0; requires a fixed lambda.
    pub coupled_bk_upper: Option<Matrix>,
}

/// Output of an observer-gain stage: L = diag(lambda)^-1 V with
/// A - LC >= 0 and (A - LC)^T lambda <= lambda - t 1.
#[derive(Clone, Debug)]
pub struct ObserverSynthesis {
    pub l: Matrix,
    pub v: Matrix,
    pub lambda: Vec<f64>,
    pub margin: f64,
}

/// Find L with A - LC >= 0 Schur plus the requested optional rows, or None
/// when the LP margin cannot reach eps. `noise` carries (E1, F1) and is
/// required by the 17-series options.
pub fn synth_observer_gain(
    a: &Matrix,
    c: &Matrix,
    noise: Option<(&[f64], &[f64])>,
    opts: &ObserverOptions,
    lambda_fixed: Option<&[f64]>,
    eps: f64,
    d_max: f64,
) -> Result<Option<ObserverSynthesis>, SynthesisError> {
    assert!(a.is_square(), "A must be square");
    assert_eq!(c.cols(), a.rows(), "C column count");
    let n = a.rows();
    let p = c.rows();
    if (opts.require_17a || opts.require_17bc) && noise.is_none() {
        return Err(SynthesisError::NoiseRowsNeedNoise);
    }
    if opts.coupled_bk_upper.is_some() && lambda_fixed.is_none() {
        return Err(SynthesisError::CoupledNeedsLambda);
    }
    let lambda_vars = lambda_fixed.is_none();
    let base = if lambda_vars { n } else { 0 };
    let nv = base + n * p;
    let v_idx = |i: usize, k: usize| base + i * p + k;
    // Adds coef * lambda_i to a (row, rhs) pair in "lhs >= rhs" form.
    let lam = |row: &mut [f64], rhs: &mut f64, i: usize, coef: f64| {
        if lambda_vars {
            row[i] += coef;
        } else {
            *rhs -= coef * lambda_fixed.unwrap()[i];
        }
    };

    let mut weak: Vec<(Vec<f64>, f64)> = Vec::new();
    // diag(lambda) A - V C >= 0
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![0.0; nv];
            let mut rhs = 0.0;
            lam(&mut row, &mut rhs, i, a[(i, j)]);
            for k in 0..p {
                row[v_idx(i, k)] -= c[(k, j)];
            }
            weak.push((row, rhs));
        }
    }
    if opts.require_lc_nonneg {
        // V C >= 0
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![0.0; nv];
                for k in 0..p {
                    row[v_idx(i, k)] += c[(k, j)];
                }
                weak.push((row, 0.0));
            }
        }
    }
    if let Some(bku) = &opts.coupled_bk_upper {
        // diag(lambda) (B K_upper) + V C >= 0
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![0.0; nv];
                let mut rhs = 0.0;
                lam(&mut row, &mut rhs, i, bku[(i, j)]);
                for k in 0..p {
                    row[v_idx(i, k)] += c[(k, j)];
                }
                weak.push((row, rhs));
            }
        }
    }
    if let Some((e1, f1)) = noise {
        if opts.require_17a {
            // V F1 - diag(lambda) E1 >= 0
            for i in 0..n {
                let mut row = vec![0.0; nv];
                let mut rhs = 0.0;
                for k in 0..p {
                    row[v_idx(i, k)] += f1[k];
                }
                lam(&mut row, &mut rhs, i, -e1[i]);
                weak.push((row, rhs));
            }
        }
        if opts.require_17bc {
            for i in 0..n {
                // diag(lambda) E1 - V F1 >= 0
                let mut row = vec![0.0; nv];
                let mut rhs = 0.0;
                lam(&mut row, &mut rhs, i, e1[i]);
                for k in 0..p {
                    row[v_idx(i, k)] -= f1[k];
                }
                weak.push((row, rhs));
                // V F1 >= 0
                let mut row2 = vec![0.0; nv];
                for k in 0..p {
                    row2[v_idx(i, k)] += f1[k];
                }
                weak.push((row2, 0.0));
            }
        }
    }
    // Stability: lambda_j - (A^T lambda)_j + (C^T V^T 1)_j > 0 per column j.
    let mut strict = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![0.0; nv];
        let mut rhs = 0.0;
        lam(&mut row, &mut rhs, j, 1.0);
        for i in 0..n {
            lam(&mut row, &mut rhs, i, -a[(i, j)]);
        }
        for k in 0..p {
            for i in 0..n {
                row[v_idx(i, k)] += c[(k, j)];
            }
        }
        strict.push((row, rhs));
    }
    let mut bounds = vec![(None, None); nv];
    if lambda_vars {
        for b in bounds.iter_mut().take(n) {
            *b = (Some(1.0), Some(d_max));
        }
    }
    match lp::lp_feasibility_with_margin(&strict, &weak, &[], &bounds, eps)? {
        FeasibilityOutcome::Infeasible => Ok(None),
        FeasibilityOutcome::Feasible { point, margin } => {
            let lambda: Vec<f64> = if lambda_vars {
                point[..n].to_vec()
            } else {
                lambda_fixed.unwrap().to_vec()
            };
            let v = Matrix::from_fn(n, p, |i, k| point[v_idx(i, k)]);
            let l = Matrix::from_fn(n, p, |i, k| v[(i, k)] / lambda[i]);
            Ok(Some(ObserverSynthesis {
                l,
                v,
                lambda,
                margin,
            }))
        }
    }
}

/// Output of the joint upper-feedback / lower-observer stage.
#[derive(Clone, Debug)]
pub struct JointSynthesis {
    pub k_upper: Matrix,
    pub l_lower: Matrix,
    pub v: Matrix,
    pub margin: f64,
}

/// At a fixed observer scaling, jointly find K_upper and L_lower so that
/// B K_upper >= 0, A + B K_upper >= 0, the coupling row
/// diag(lambda) B K_upper + V C >= 0 and the lower-observer rows all hold,
/// maximizing the common stability margin. `noise` adds the 17b/17c rows.
pub fn synth_upper_feedback(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    lambda: &[f64],
    noise: Option<(&[f64], &[f64])>,
    eps: f64,
) -> Result<Option<JointSynthesis>, SynthesisError> {
    assert!(a.is_square(), "A must be square");
    assert_eq!(b.rows(), a.rows(), "B row count");
    assert_eq!(c.cols(), a.rows(), "C column count");
    assert_eq!(lambda.len(), a.rows(), "lambda length");
    let n = a.rows();
    let m = b.cols();
    let p = c.rows();
    let nv = m * n + n * p;
    let k_idx = |k: usize, j: usize| k * n + j;
    let v_idx = |i: usize, k: usize| m * n + i * p + k;

    let mut weak: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // (B K_upper)_{ij} >= 0
            let mut row = vec![0.0; nv];
            for k in 0..m {
                row[k_idx(k, j)] += b[(i, k)];
            }
            weak.push((row.clone(), 0.0));
            // (A + B K_upper)_{ij} >= 0
            weak.push((row.clone(), -a[(i, j)]));
            // lambda_i (B K_upper)_{ij} + (V C)_{ij} >= 0
            let mut coupled = vec![0.0; nv];
            for k in 0..m {
                coupled[k_idx(k, j)] += lambda[i] * b[(i, k)];
            }
            for k in 0..p {
                coupled[v_idx(i, k)] += c[(k, j)];
            }
            weak.push((coupled, 0.0));
            // (V C)_{ij} <= lambda_i A_{ij}
            let mut obs = vec![0.0; nv];
            for k in 0..p {
                obs[v_idx(i, k)] -= c[(k, j)];
            }
            weak.push((obs, -lambda[i] * a[(i, j)]));
        }
    }
    if let Some((e1, f1)) = noise {
        for i in 0..n {
            let mut row = vec![0.0; nv];
            for k in 0..p {
                row[v_idx(i, k)] -= f1[k];
            }
            weak.push((row, -lambda[i] * e1[i]));
            let mut row2 = vec![0.0; nv];
            for k in 0..p {
                row2[v_idx(i, k)] += f1[k];
            }
            weak.push((row2, 0.0));
        }
    }
    let mut strict = Vec::with_capacity(n);
    for j in 0..n {
        // (C^T V^T 1)_j > (A^T lambda)_j - lambda_j
        let mut row = vec![0.0; nv];
        for k in 0..p {
            for i in 0..n {
                row[v_idx(i, k)] += c[(k, j)];
            }
        }
        let at_lambda: f64 = (0..n).map(|i| a[(i, j)] * lambda[i]).sum();
        strict.push((row, at_lambda - lambda[j]));
    }
    let bounds = vec![(None, None); nv];
    match lp::lp_feasibility_with_margin(&strict, &weak, &[], &bounds, eps)? {
        FeasibilityOutcome::Infeasible => Ok(None),
        FeasibilityOutcome::Feasible { point, margin } => {
            let k_upper = Matrix::from_fn(m, n, |k, j| point[k_idx(k, j)]);
            let v = Matrix::from_fn(n, p, |i, k| point[v_idx(i, k)]);
            let l_lower = Matrix::from_fn(n, p, |i, k| v[(i, k)] / lambda[i]);
            Ok(Some(JointSynthesis {
                k_upper,
                l_lower,
                v,
                margin,
            }))
        }
    }
}

/// Full synthesis pipeline. Every feasible answer has been re-certified:
/// all requested condition margins >= -1e-9 and all block radii <=
/// 1 - 1e-6; otherwise the result is infeasible at the recheck stage.
pub fn synth_full(
    sys: &PositiveSystem,
    req: &SynthesisRequest,
) -> Result<SynthesisResult, SynthesisError> {
    assert!(req.margin_floor > 0.0, "margin floor must be positive");
    assert!(req.scaling_bound >= 1.0, "scaling bound must be >= 1");
    if req.include_noise_conditions && !sys.has_noise() {
        return Err(SynthesisError::MissingNoise(
            "noise conditions were requested but the system has no E/F",
        ));
    }
    let eps = req.margin_floor;
    let d_max = req.scaling_bound;
    let e1 = sys.e_ones();
    let f1 = sys.f_ones();
    let noise_vecs: Option<(&[f64], &[f64])> = if req.include_noise_conditions {
        Some((&e1, &f1))
    } else {
        None
    };

    let Some(fb) = synth_state_feedback(sys.a(), sys.b(), eps, d_max)? else {
        return Ok(SynthesisResult::infeasible(SynthesisStage::StateFeedback));
    };

    let (gains, observer_cert) = match req.mode {
        SynthesisMode::Thm1 => {
            let lower_opts = ObserverOptions {
                require_lc_nonneg: true,
                require_17bc: req.include_noise_conditions,
                ..Default::default()
            };
            let Some(lower) =
                synth_observer_gain(sys.a(), sys.c(), noise_vecs, &lower_opts, None, eps, d_max)?
            else {
                return Ok(SynthesisResult::infeasible(SynthesisStage::LowerObserver));
            };
            let upper = if req.include_noise_conditions {
                let upper_opts = ObserverOptions {
                    require_lc_nonneg: true,
                    require_17a: true,
                    ..Default::default()
                };
                let Some(upper) = synth_observer_gain(
                    sys.a(),
                    sys.c(),
                    noise_vecs,
                    &upper_opts,
                    None,
                    eps,
                    d_max,
                )?
                else {
                    return Ok(SynthesisResult::infeasible(SynthesisStage::UpperObserver));
                };
                upper
            } else {
                lower.clone()
            };
            let cert = ScalingCertificate {
                scaling: lower.lambda.clone(),
                margin: lower.margin,
            };
            let gains = GainSet::new(
                upper.l,
                lower.l,
                Matrix::zeros(sys.m(), sys.n()),
                fb.k.clone(),
            );
            (gains, cert)
        }
        SynthesisMode::Coupled => {
            // Pass 1 ignores the coupling row and only serves to produce a
            // workable observer scaling.
            let pass1_opts = ObserverOptions {
                require_17bc: req.include_noise_conditions,
                ..Default::default()
            };
            let Some(pass1) =
                synth_observer_gain(sys.a(), sys.c(), noise_vecs, &pass1_opts, None, eps, d_max)?
            else {
                return Ok(SynthesisResult::infeasible(SynthesisStage::LowerObserver));
            };
            let mut lambda = pass1.lambda;
            let mut best: Option<(JointSynthesis, Vec<f64>)> = None;
            for _ in 0..=req.reiterations {
                let Some(joint) =
                    synth_upper_feedback(sys.a(), sys.b(), sys.c(), &lambda, noise_vecs, eps)?
                else {
                    break;
                };
                let improved = best
                    .as_ref()
                    .is_none_or(|(b, _)| joint.margin > b.margin + 1e-12);
                if !improved {
                    break;
                }
                // Refresh the scaling from the achieved lower gain; margins
                // are monotone under this alternation.
                let low_block = sys.a().sub(&joint.l_lower.matmul(sys.c()));
                best = Some((joint, lambda.clone()));
                match lp::schur_certificate(&low_block.transpose(), d_max, eps)? {
                    Some((lam, _)) => lambda = lam,
                    None => break,
                }
            }
            let Some((joint, joint_lambda)) = best else {
                return Ok(SynthesisResult::infeasible(SynthesisStage::UpperFeedback));
            };
            let k_lower = fb.k.sub(&joint.k_upper);
            let upper_opts = ObserverOptions {
                require_17a: req.include_noise_conditions,
                ..Default::default()
            };
            let Some(upper) =
                synth_observer_gain(sys.a(), sys.c(), noise_vecs, &upper_opts, None, eps, d_max)?
            else {
                return Ok(SynthesisResult::infeasible(SynthesisStage::UpperObserver));
            };
            let cert = ScalingCertificate {
                scaling: joint_lambda,
                margin: joint.margin,
            };
            let gains = GainSet::new(upper.l, joint.l_lower, joint.k_upper, k_lower);
            (gains, cert)
        }
    };

    let report = model::certify(sys, &gains, RECHECK_TOL)?;
    let radii_ok = report
        .radii
        .is_some_and(|r| r.max_block() <= RECHECK_RADIUS_BOUND);
    let noise_ok = !req.include_noise_conditions || report.noise_ok() == Some(true);
    let ok = report.invariance_ok() == Some(true) && radii_ok && noise_ok;
    Ok(SynthesisResult {
        status: if ok {
            SynthesisStatus::Feasible
        } else {
            SynthesisStatus::Infeasible(SynthesisStage::Recheck)
        },
        gains: Some(gains),
        feedback_certificate: Some(ScalingCertificate {
            scaling: fb.d,
            margin: fb.margin,
        }),
        observer_certificate: Some(observer_cert),
        report: Some(report),
    })
}

/// A cone point whose one-step image leaves the cone, witnessing that a
/// violated invariance condition really breaks invariance.
#[derive(Clone, Debug)]
pub struct ConeExit {
    pub x: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub x_lower: Vec<f64>,
    pub next_x: Vec<f64>,
    pub next_upper: Vec<f64>,
    pub next_lower: Vec<f64>,
    /// Largest violation of x_upper+ >= x+ >= x_lower+ >= 0.
    pub violation: f64,
}

fn cone_violation(x: &[f64], xu: &[f64], xl: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        worst = worst.max(-xl[i]).max(xl[i] - x[i]).max(x[i] - xu[i]);
    }
    worst
}

/// Construct a point of the ordering cone that exits it in one step when
/// the named invariance condition is violated; None when the condition
/// holds. The construction follows the two cases of the necessity
/// argument: full-error points for the feedback conditions, pure error
/// coordinates for the observer conditions, and a scaled upper error for
/// the B K_upper condition.
pub fn find_necessity_counterexample(
    sys: &PositiveSystem,
    g: &GainSet,
    violated: ConditionId,
) -> Result<Option<ConeExit>, SynthesisError> {
    if !violated.is_invariance() {
        return Err(SynthesisError::NotInvarianceCondition(violated));
    }
    let mats = invariance_matrices(sys, g)?;
    let (_, mat) = mats
        .iter()
        .find(|(id, _)| *id == violated)
        .expect("invariance id");
    let n = sys.n();
    let mut worst = (0usize, 0usize, f64::INFINITY);
    for i in 0..mat.rows() {
        for j in 0..mat.cols() {
            if mat[(i, j)] < worst.2 {
                worst = (i, j, mat[(i, j)]);
            }
        }
    }
    let (i_viol, j_viol, value) = worst;
    if value >= 0.0 {
        return Ok(None);
    }
    let unit = |j: usize| {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        v
    };
    let (x, xu, xl) = match violated {
        // zero errors along the violating coordinate
        ConditionId::C6a => (unit(j_viol), unit(j_viol), unit(j_viol)),
        // lower error equal to the state, no upper error
        ConditionId::C6b => (unit(j_viol), unit(j_viol), vec![0.0; n]),
        // a large upper error in the violating column overwhelms the rest
        ConditionId::C6c => {
            let m6a = &mats[0].1;
            let base = m6a.row_sums()[i_viol];
            let scale = 10.0 * (1.0 + (base / value).abs());
            let x = vec![1.0; n];
            let mut xu = vec![1.0; n];
            xu[j_viol] += scale;
            (x.clone(), xu, x)
        }
        // pure upper-error coordinate
        ConditionId::C6d => (vec![0.0; n], unit(j_viol), vec![0.0; n]),
        // pure lower-error coordinate (state rides along)
        ConditionId::C6e => (unit(j_viol), unit(j_viol), vec![0.0; n]),
        // zero lower bound, state at the upper bound
        ConditionId::C6f => (unit(j_viol), unit(j_viol), vec![0.0; n]),
        _ => unreachable!(),
    };
    let ext = build_extended_closed_loop(sys, g)?;
    let mut stacked = Vec::with_capacity(3 * n);
    stacked.extend_from_slice(&x);
    stacked.extend_from_slice(&xu);
    stacked.extend_from_slice(&xl);
    let image = ext.mul_vec(&stacked);
    let next_x = image[..n].to_vec();
    let next_upper = image[n..2 * n].to_vec();
    let next_lower = image[2 * n..].to_vec();
    let violation = cone_violation(&next_x, &next_upper, &next_lower);
    Ok(Some(ConeExit {
        x,
        x_upper: xu,
        x_lower: xl,
        next_x,
        next_upper,
        next_lower,
        violation,
    }))
}
