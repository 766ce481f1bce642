//! System and gain data model plus every certification check on a design:
//! the six cone-invariance conditions of the closed loop, the generic
//! necessary conditions for unstructured observer feedback, the noise
//! conditions for stability in expectation, and Schur stability of all
//! closed-loop blocks.
//!
//! Margins are reported as raw minimum entries of the tested matrix, so
//! they are directly comparable to hand arithmetic on the demo systems.

use crate::linalg::{vec_sub, LinalgError, Matrix};
use thiserror::Error;

/// Default elementwise nonnegativity tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// rho < 1 - STABILITY_TOL counts as Schur.
pub const STABILITY_TOL: f64 = 1e-9;
/// Agreement required between the extended spectral radius and the block
/// radii when the dominant eigenvalue is simple.
pub const SPECTRUM_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("noise model missing: {0}")]
    MissingNoise(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(
        "extended spectral radius {rho_ext} disagrees with block radii (max {max_block}, tol {tol:.3e})"
    )]
    SpectralMismatch {
        rho_ext: f64,
        max_block: f64,
        tol: f64,
    },
}

/// Plant x+ = A x + B u, y = C x (+ E w / F v when the noise matrices are
/// present). `positivization_mode` lifts the elementwise nonnegativity
/// requirement on A: the closed loop is then made positive by feedback.
#[derive(Clone, Debug)]
pub struct PositiveSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    e: Option<Matrix>,
    f: Option<Matrix>,
    positivization_mode: bool,
}

impl PositiveSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self, ModelError> {
        if !a.is_square() {
            return Err(ModelError::Dimension(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        if b.rows() != n {
            return Err(ModelError::Dimension(format!(
                "B must have {} rows, got {}",
                n,
                b.rows()
            )));
        }
        if c.cols() != n {
            return Err(ModelError::Dimension(format!(
                "C must have {} columns, got {}",
                n,
                c.cols()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            e: None,
            f: None,
            positivization_mode: false,
        })
    }

    pub fn with_noise(mut self, e: Matrix, f: Matrix) -> Result<Self, ModelError> {
        if e.rows() != self.n() {
            return Err(ModelError::Dimension(format!(
                "E must have {} rows, got {}",
                self.n(),
                e.rows()
            )));
        }
        if f.rows() != self.p() {
            return Err(ModelError::Dimension(format!(
                "F must have {} rows, got {}",
                self.p(),
                f.rows()
            )));
        }
        self.e = Some(e);
        self.f = Some(f);
        Ok(self)
    }

    pub fn with_positivization(mut self, on: bool) -> Self {
        self.positivization_mode = on;
        self
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn e(&self) -> Option<&Matrix> {
        self.e.as_ref()
    }
    pub fn f(&self) -> Option<&Matrix> {
        self.f.as_ref()
    }
    pub fn positivization_mode(&self) -> bool {
        self.positivization_mode
    }
    pub fn has_noise(&self) -> bool {
        self.e.is_some() && self.f.is_some()
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.cols()
    }
    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.rows()
    }
    /// Process-noise channels (0 when E is absent).
    pub fn q_w(&self) -> usize {
        self.e.as_ref().map_or(0, Matrix::cols)
    }
    /// Measurement-noise channels (0 when F is absent).
    pub fn q_v(&self) -> usize {
        self.f.as_ref().map_or(0, Matrix::cols)
    }

    /// E 1 (zeros when E is absent).
    pub fn e_ones(&self) -> Vec<f64> {
        self.e
            .as_ref()
            .map_or(vec![0.0; self.n()], Matrix::row_sums)
    }

    /// F 1 (zeros when F is absent).
    pub fn f_ones(&self) -> Vec<f64> {
        self.f
            .as_ref()
            .map_or(vec![0.0; self.p()], Matrix::row_sums)
    }
}

/// The four design matrices: output-injection gains for the upper and lower
/// estimates and feedback gains from each estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSet {
    pub l_upper: Matrix,
    pub l_lower: Matrix,
    pub k_upper: Matrix,
    pub k_lower: Matrix,
}

impl GainSet {
    pub fn new(l_upper: Matrix, l_lower: Matrix, k_upper: Matrix, k_lower: Matrix) -> Self {
        Self {
            l_upper,
            l_lower,
            k_upper,
            k_lower,
        }
    }

    pub fn zeros(sys: &PositiveSystem) -> Self {
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        Self {
            l_upper: Matrix::zeros(n, p),
            l_lower: Matrix::zeros(n, p),
            k_upper: Matrix::zeros(m, n),
            k_lower: Matrix::zeros(m, n),
        }
    }

    pub fn validate_for(&self, sys: &PositiveSystem) -> Result<(), ModelError> {
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        let check = |name: &str, mat: &Matrix, rows: usize, cols: usize| {
            if mat.rows() != rows || mat.cols() != cols {
                Err(ModelError::Dimension(format!(
                    "{name} must be {rows}x{cols}, got {}x{}",
                    mat.rows(),
                    mat.cols()
                )))
            } else {
                Ok(())
            }
        };
        check("L_upper", &self.l_upper, n, p)?;
        check("L_lower", &self.l_lower, n, p)?;
        check("K_upper", &self.k_upper, m, n)?;
        check("K_lower", &self.k_lower, m, n)?;
        Ok(())
    }
}

/// Identifiers for every checkable condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConditionId {
    /// A + B(K_upper + K_lower) >= 0
    C6a,
    /// A + B K_upper >= 0
    C6b,
    /// B K_upper >= 0
    C6c,
    /// A - L_upper C >= 0
    C6d,
    /// A - L_lower C >= 0
    C6e,
    /// B K_upper + L_lower C >= 0
    C6f,
    /// A + B K >= 0 (unstructured feedback)
    C10a,
    /// B K >= 0
    C10b,
    /// L C >= 0
    C10c,
    /// L_upper F 1 - E 1 >= 0
    C17a,
    /// E 1 - L_lower F 1 >= 0
    C17b,
    /// L_lower F 1 >= 0
    C17c,
}

impl ConditionId {
    pub const INVARIANCE: [ConditionId; 6] = [
        ConditionId::C6a,
        ConditionId::C6b,
        ConditionId::C6c,
        ConditionId::C6d,
        ConditionId::C6e,
        ConditionId::C6f,
    ];
    pub const GENERIC: [ConditionId; 3] = [ConditionId::C10a, ConditionId::C10b, ConditionId::C10c];
    pub const NOISE: [ConditionId; 3] = [ConditionId::C17a, ConditionId::C17b, ConditionId::C17c];

    /// Fixed key used in rendered reports.
    pub fn key(self) -> &'static str {
        match self {
            ConditionId::C6a => "cond6a",
            ConditionId::C6b => "cond6b",
            ConditionId::C6c => "cond6c",
            ConditionId::C6d => "cond6d",
            ConditionId::C6e => "cond6e",
            ConditionId::C6f => "cond6f",
            ConditionId::C10a => "cond10a",
            ConditionId::C10b => "cond10b",
            ConditionId::C10c => "cond10c",
            ConditionId::C17a => "cond17a",
            ConditionId::C17b => "cond17b",
            ConditionId::C17c => "cond17c",
        }
    }

    pub fn is_invariance(self) -> bool {
        Self::INVARIANCE.contains(&self)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConditionRecord {
    pub id: ConditionId,
    /// Minimum entry of the tested matrix or vector.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralRadii {
    /// rho(A + B(K_upper + K_lower))
    pub rho_cl: f64,
    /// rho(A - L_upper C)
    pub rho_up: f64,
    /// rho(A - L_lower C)
    pub rho_low: f64,
    /// rho of the 3n x 3n extended closed-loop matrix
    pub rho_ext: f64,
}

impl SpectralRadii {
    pub fn max_block(&self) -> f64 {
        self.rho_cl.max(self.rho_up).max(self.rho_low)
    }
}

/// Certification artifact: per-condition margins plus spectral radii.
#[derive(Clone, Debug, Default)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionRecord>,
    pub radii: Option<SpectralRadii>,
}

impl ConditionReport {
    pub fn record(&self, id: ConditionId) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|r| r.id == id)
    }

    pub fn margin(&self, id: ConditionId) -> Option<f64> {
        self.record(id).map(|r| r.margin)
    }

    fn group_ok(&self, ids: &[ConditionId]) -> Option<bool> {
        let recs: Vec<&ConditionRecord> = ids.iter().filter_map(|&id| self.record(id)).collect();
        if recs.len() == ids.len() {
            Some(recs.iter().all(|r| r.pass))
        } else {
            None
        }
    }

    /// All six invariance conditions pass (None when not all were checked).
    pub fn invariance_ok(&self) -> Option<bool> {
        self.group_ok(&ConditionId::INVARIANCE)
    }

    pub fn generic_ok(&self) -> Option<bool> {
        self.group_ok(&ConditionId::GENERIC)
    }

    pub fn noise_ok(&self) -> Option<bool> {
        self.group_ok(&ConditionId::NOISE)
    }

    /// All three closed-loop blocks are Schur.
    pub fn stability_ok(&self) -> Option<bool> {
        self.radii.map(|r| r.max_block() < 1.0 - STABILITY_TOL)
    }

    pub fn merge(&mut self, other: ConditionReport) {
        self.conditions.extend(other.conditions);
        if other.radii.is_some() {
            self.radii = other.radii;
        }
    }

    /// Flat key/value rendering with fixed keys (cond6a..cond6f,
    /// cond10a..cond10c, cond17a..cond17c, rho_cl, rho_up, rho_low, rho_ext)
    /// followed by the overall verdicts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for rec in &self.conditions {
            out.push_str(&format!(
                "{} {:.12e} {}\n",
                rec.id.key(),
                rec.margin,
                if rec.pass { "pass" } else { "fail" }
            ));
        }
        if let Some(r) = self.radii {
            out.push_str(&format!("rho_cl {:.12e}\n", r.rho_cl));
            out.push_str(&format!("rho_up {:.12e}\n", r.rho_up));
            out.push_str(&format!("rho_low {:.12e}\n", r.rho_low));
            out.push_str(&format!("rho_ext {:.12e}\n", r.rho_ext));
        }
        if let Some(v) = self.invariance_ok() {
            out.push_str(&format!("invariance_ok {v}\n"));
        }
        if let Some(v) = self.generic_ok() {
            out.push_str(&format!("generic_ok {v}\n"));
        }
        if let Some(v) = self.stability_ok() {
            out.push_str(&format!("stability_ok {v}\n"));
        }
        if let Some(v) = self.noise_ok() {
            out.push_str(&format!("noise_ok {v}\n"));
        }
        out
    }
}

/// A single data-model violation found by [`validate_system`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// "A" or "E".
    pub matrix: &'static str,
    /// Zero-based entry.
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub constraint: &'static str,
}

/// Enforce the sign invariants of the data model: A >= 0 unless
/// positivization mode is on, and E >= 0 whenever E is present.
pub fn validate_system(sys: &PositiveSystem) -> Vec<Violation> {
    let mut v = Vec::new();
    if !sys.positivization_mode() {
        let a = sys.a();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] < 0.0 {
                    v.push(Violation {
                        matrix: "A",
                        row: i,
                        col: j,
                        value: a[(i, j)],
                        constraint: "A >= 0 (autonomous dynamics must be positive)",
                    });
                }
            }
        }
    }
    if let Some(e) = sys.e() {
        for i in 0..e.rows() {
            for j in 0..e.cols() {
                if e[(i, j)] < 0.0 {
                    v.push(Violation {
                        matrix: "E",
                        row: i,
                        col: j,
                        value: e[(i, j)],
                        constraint: "E >= 0 (process noise enters positively)",
                    });
                }
            }
        }
    }
    v
}

/// The six matrices whose elementwise nonnegativity is equivalent to
/// invariance of the ordering cone, keyed by condition id.
pub fn invariance_matrices(
    sys: &PositiveSystem,
    g: &GainSet,
) -> Result<[(ConditionId, Matrix); 6], ModelError> {
    g.validate_for(sys)?;
    let a = sys.a();
    let bku = sys.b().matmul(&g.k_upper);
    let bkl = sys.b().matmul(&g.k_lower);
    let luc = g.l_upper.matmul(sys.c());
    let llc = g.l_lower.matmul(sys.c());
    Ok([
        (ConditionId::C6a, a.add(&bku).add(&bkl)),
        (ConditionId::C6b, a.add(&bku)),
        (ConditionId::C6c, bku.clone()),
        (ConditionId::C6d, a.sub(&luc)),
        (ConditionId::C6e, a.sub(&llc)),
        (ConditionId::C6f, bku.add(&llc)),
    ])
}

/// 3n x 3n one-step map of the stacked (x, x_upper, x_lower) closed loop.
pub fn build_extended_closed_loop(sys: &PositiveSystem, g: &GainSet) -> Result<Matrix, ModelError> {
    g.validate_for(sys)?;
    let a = sys.a();
    let bku = sys.b().matmul(&g.k_upper);
    let bkl = sys.b().matmul(&g.k_lower);
    let luc = g.l_upper.matmul(sys.c());
    let llc = g.l_lower.matmul(sys.c());
    let up_diag = a.sub(&luc).add(&bku);
    let low_diag = a.sub(&llc).add(&bkl);
    Ok(Matrix::from_blocks(&[
        vec![a, &bku, &bkl],
        vec![&luc, &up_diag, &bkl],
        vec![&llc, &bku, &low_diag],
    ]))
}

/// Block-triangular dynamics of (x, e_upper, e_lower) and the constant
/// noise-driven bias [E1; L_upper F1 - E1; E1 - L_lower F1]. The bias is
/// zero when the noise model is absent.
pub fn build_error_dynamics(
    sys: &PositiveSystem,
    g: &GainSet,
) -> Result<(Matrix, Vec<f64>), ModelError> {
    g.validate_for(sys)?;
    let a = sys.a();
    let n = sys.n();
    let bku = sys.b().matmul(&g.k_upper);
    let bkl = sys.b().matmul(&g.k_lower);
    let cl = a.add(&bku).add(&bkl);
    let up = a.sub(&g.l_upper.matmul(sys.c()));
    let low = a.sub(&g.l_lower.matmul(sys.c()));
    let z = Matrix::zeros(n, n);
    let neg_bkl = bkl.scale(-1.0);
    let g_mat = Matrix::from_blocks(&[
        vec![&cl, &bku, &neg_bkl],
        vec![&z, &up, &z],
        vec![&z, &z, &low],
    ]);
    let e1 = sys.e_ones();
    let f1 = sys.f_ones();
    let luf = g.l_upper.mul_vec(&f1);
    let llf = g.l_lower.mul_vec(&f1);
    let mut bias = Vec::with_capacity(3 * n);
    bias.extend_from_slice(&e1);
    bias.extend(vec_sub(&luf, &e1));
    bias.extend(vec_sub(&e1, &llf));
    Ok((g_mat, bias))
}

fn record(id: ConditionId, margin: f64, tol: f64) -> ConditionRecord {
    ConditionRecord {
        id,
        margin,
        pass: margin >= -tol,
    }
}

/// Margins of the six invariance conditions.
pub fn check_invariance_conditions(
    sys: &PositiveSystem,
    g: &GainSet,
    tol: f64,
) -> Result<ConditionReport, ModelError> {
    let mats = invariance_matrices(sys, g)?;
    Ok(ConditionReport {
        conditions: mats
            .iter()
            .map(|(id, m)| record(*id, m.min_entry(), tol))
            .collect(),
        radii: None,
    })
}

/// Margins of the necessary conditions for feedback through a single
/// unstructured positive observer: A + BK >= 0, BK >= 0, LC >= 0.
pub fn check_generic_conditions(
    sys: &PositiveSystem,
    k: &Matrix,
    l: &Matrix,
    tol: f64,
) -> Result<ConditionReport, ModelError> {
    if k.rows() != sys.m() || k.cols() != sys.n() {
        return Err(ModelError::Dimension(format!(
            "K must be {}x{}, got {}x{}",
            sys.m(),
            sys.n(),
            k.rows(),
            k.cols()
        )));
    }
    if l.rows() != sys.n() || l.cols() != sys.p() {
        return Err(ModelError::Dimension(format!(
            "L must be {}x{}, got {}x{}",
            sys.n(),
            sys.p(),
            l.rows(),
            l.cols()
        )));
    }
    let bk = sys.b().matmul(k);
    let lc = l.matmul(sys.c());
    Ok(ConditionReport {
        conditions: vec![
            record(ConditionId::C10a, sys.a().add(&bk).min_entry(), tol),
            record(ConditionId::C10b, bk.min_entry(), tol),
            record(ConditionId::C10c, lc.min_entry(), tol),
        ],
        radii: None,
    })
}

/// Margins of the noise conditions: L_upper F1 - E1, E1 - L_lower F1 and
/// L_lower F1, all >= 0. Requires the noise model.
pub fn check_noise_conditions(
    sys: &PositiveSystem,
    g: &GainSet,
    tol: f64,
) -> Result<ConditionReport, ModelError> {
    if !sys.has_noise() {
        return Err(ModelError::MissingNoise(
            "noise conditions need both E and F",
        ));
    }
    g.validate_for(sys)?;
    let e1 = sys.e_ones();
    let f1 = sys.f_ones();
    let luf = g.l_upper.mul_vec(&f1);
    let llf = g.l_lower.mul_vec(&f1);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConditionReport {
        conditions: vec![
            record(ConditionId::C17a, min(&vec_sub(&luf, &e1)), tol),
            record(ConditionId::C17b, min(&vec_sub(&e1, &llf)), tol),
            record(ConditionId::C17c, min(&llf), tol),
        ],
        radii: None,
    })
}

/// Spectral radii of the three block dynamics and of the full extended
/// closed loop. The extended radius is cross-checked against the block
/// radii (the two forms are similar); the tolerance is widened when the
/// dominant block eigenvalue is repeated, where the characteristic
/// polynomial route loses accuracy like eps^(1/multiplicity).
pub fn check_stability(sys: &PositiveSystem, g: &GainSet) -> Result<ConditionReport, ModelError> {
    g.validate_for(sys)?;
    let a = sys.a();
    let bku = sys.b().matmul(&g.k_upper);
    let bkl = sys.b().matmul(&g.k_lower);
    let cl = a.add(&bku).add(&bkl);
    let up = a.sub(&g.l_upper.matmul(sys.c()));
    let low = a.sub(&g.l_lower.matmul(sys.c()));

    let mut block_eigs = cl.eigenvalues()?;
    block_eigs.extend(up.eigenvalues()?);
    block_eigs.extend(low.eigenvalues()?);
    let rho_cl = cl.spectral_radius()?;
    let rho_up = up.spectral_radius()?;
    let rho_low = low.spectral_radius()?;

    let ext = build_extended_closed_loop(sys, g)?;
    let rho_ext = ext.spectral_radius()?;

    let radii = SpectralRadii {
        rho_cl,
        rho_up,
        rho_low,
        rho_ext,
    };
    let max_block = radii.max_block();
    let dominant = block_eigs
        .iter()
        .max_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap())
        .copied();
    let multiplicity = dominant.map_or(1, |d| {
        block_eigs
            .iter()
            .filter(|z| (**z - d).norm() <= 1e-5 * (1.0 + d.norm()))
            .count()
            .max(1)
    });
    let tol = if multiplicity > 1 {
        SPECTRUM_CONSISTENCY_TOL
            .max(40.0 * (1e-14f64).powf(1.0 / multiplicity as f64) * (1.0 + max_block))
    } else {
        SPECTRUM_CONSISTENCY_TOL
    };
    if (rho_ext - max_block).abs() > tol {
        return Err(ModelError::SpectralMismatch {
            rho_ext,
            max_block,
            tol,
        });
    }
    Ok(ConditionReport {
        conditions: Vec::new(),
        radii: Some(radii),
    })
}

/// Full certification: invariance margins, stability radii, and the noise
/// margins when the system carries a noise model.
pub fn certify(sys: &PositiveSystem, g: &GainSet, tol: f64) -> Result<ConditionReport, ModelError> {
    let mut report = check_invariance_conditions(sys, g, tol)?;
    report.merge(check_stability(sys, g)?);
    if sys.has_noise() {
        report.merge(check_noise_conditions(sys, g, tol)?);
    }
    Ok(report)
}
