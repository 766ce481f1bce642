//! Small dense linear programming.
//!
//! A two-phase primal simplex over an explicit tableau, sized for the tiny
//! gain-synthesis programs this crate generates (tens of variables and
//! rows). Free variables are split into positive/negative parts, bounded
//! variables are shifted to the nonnegative orthant, and strict
//! inequalities are handled by [`lp_feasibility_with_margin`], which
//! maximizes a shared slack variable instead of ever representing ">"
//! directly.

use crate::linalg::Matrix;
use thiserror::Error;

/// Reduced-cost tolerance for entering-variable selection.
const RED_TOL: f64 = 1e-9;
/// Minimum magnitude of a pivot element in the ratio test.
const PIV_TOL: f64 = 1e-9;
/// A pivot with ratio below this counts as degenerate.
const DEGEN_TOL: f64 = 1e-10;
/// Total pivot budget across both phases.
const ITERATION_CAP: usize = 10_000;
/// Phase-1 acceptance: sum of artificials must come down to this level.
const PHASE1_TOL: f64 = 1e-8;

/// Default floor on the maximized margin of a strict-inequality system.
pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-6;
/// The margin variable is capped at this value to keep the LP bounded.
pub const MARGIN_CAP: f64 = 1.0;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex iteration cap exceeded ({0} pivots)")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Present iff status is Optimal.
    pub point: Option<Vec<f64>>,
    /// Present iff status is Optimal.
    pub objective_value: Option<f64>,
}

impl LpOutcome {
    fn status_only(status: LpStatus) -> Self {
        Self {
            status,
            point: None,
            objective_value: None,
        }
    }
}

/// maximize objective . x subject to inequality rows (a . x <= b),
/// equality rows (a . x = b) and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LpProblem {
    num_vars: usize,
    objective: Vec<f64>,
    ineq: Vec<(Vec<f64>, f64)>,
    eq: Vec<(Vec<f64>, f64)>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

impl LpProblem {
    /// All variables start free with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            ineq: Vec::new(),
            eq: Vec::new(),
            lower: vec![None; num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn maximize(&mut self, coeffs: Vec<f64>) {
        assert_eq!(coeffs.len(), self.num_vars, "objective width");
        self.objective = coeffs;
    }

    /// a . x <= rhs
    pub fn add_leq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "row width");
        self.ineq.push((coeffs, rhs));
    }

    /// a . x >= rhs
    pub fn add_geq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        let neg: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        assert_eq!(neg.len(), self.num_vars, "row width");
        self.ineq.push((neg, -rhs));
    }

    /// a . x = rhs
    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "row width");
        self.eq.push((coeffs, rhs));
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }
}

/// How an original variable maps into the nonnegative standard form.
#[derive(Clone, Copy)]
enum VarRepr {
    /// x = offset + s
    Shift { std: usize, offset: f64 },
    /// x = offset - s
    NegShift { std: usize, offset: f64 },
    /// x = p - q
    Split { pos: usize, neg: usize },
}

struct Tableau {
    cols: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal(f64),
    Unbounded,
}

impl Tableau {
    #[allow(clippy::needless_range_loop)]
    fn pivot(&mut self, row: usize, col: usize, red: &mut [f64], val: &mut f64) {
        let piv = self.a[row][col];
        for v in &mut self.a[row] {
            *v /= piv;
        }
        self.b[row] /= piv;
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let factor = self.a[r][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                self.a[r][j] -= factor * self.a[row][j];
            }
            self.a[r][col] = 0.0;
            self.b[r] -= factor * self.b[row];
            if self.b[r].abs() < 1e-13 {
                self.b[r] = 0.0;
            }
        }
        let factor = red[col];
        if factor != 0.0 {
            for j in 0..self.cols {
                red[j] -= factor * self.a[row][j];
            }
            red[col] = 0.0;
            *val += factor * self.b[row];
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Run the simplex loop for one phase, maximizing `cost` over the
    /// columns enabled in `allowed`. Bland's rule engages after a run of
    /// degenerate pivots and disengages on progress.
    #[allow(clippy::needless_range_loop)]
    fn run_phase(&mut self, cost: &[f64], allowed: &[bool]) -> Result<PhaseEnd, LpError> {
        let mut red: Vec<f64> = cost.to_vec();
        let mut val = 0.0;
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                for j in 0..self.cols {
                    red[j] -= cb * self.a[r][j];
                }
                val += cb * self.b[r];
            }
        }
        for &bv in &self.basis {
            red[bv] = 0.0;
        }
        let bland_trigger = 5 * self.cols;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            let entering = if bland {
                (0..self.cols).find(|&j| allowed[j] && red[j] > RED_TOL)
            } else {
                (0..self.cols)
                    .filter(|&j| allowed[j] && red[j] > RED_TOL)
                    .max_by(|&x, &y| red[x].partial_cmp(&red[y]).unwrap())
            };
            let Some(col) = entering else {
                return Ok(PhaseEnd::Optimal(val));
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let denom = self.a[r][col];
                if denom > PIV_TOL {
                    let ratio = self.b[r] / denom;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leaving else {
                return Ok(PhaseEnd::Unbounded);
            };
            if self.iterations >= ITERATION_CAP {
                return Err(LpError::IterationLimit(self.iterations));
            }
            self.pivot(row, col, &mut red, &mut val);
            if ratio <= DEGEN_TOL {
                degenerate_run += 1;
                if degenerate_run >= bland_trigger {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }
}

/// Solve a small dense LP with the two-phase primal simplex.
pub fn lp_solve(p: &LpProblem) -> Result<LpOutcome, LpError> {
    for (row, _) in p.ineq.iter().chain(&p.eq) {
        if row.len() != p.num_vars {
            return Err(LpError::Malformed("constraint row width".into()));
        }
    }
    // Standard-form variable mapping.
    let mut reprs = Vec::with_capacity(p.num_vars);
    let mut n_std = 0usize;
    let mut range_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..p.num_vars {
        match (p.lower[i], p.upper[i]) {
            (Some(l), Some(u)) => {
                if l > u {
                    return Ok(LpOutcome::status_only(LpStatus::Infeasible));
                }
                reprs.push(VarRepr::Shift {
                    std: n_std,
                    offset: l,
                });
                range_rows.push((n_std, u - l));
                n_std += 1;
            }
            (Some(l), None) => {
                reprs.push(VarRepr::Shift {
                    std: n_std,
                    offset: l,
                });
                n_std += 1;
            }
            (None, Some(u)) => {
                reprs.push(VarRepr::NegShift {
                    std: n_std,
                    offset: u,
                });
                n_std += 1;
            }
            (None, None) => {
                reprs.push(VarRepr::Split {
                    pos: n_std,
                    neg: n_std + 1,
                });
                n_std += 2;
            }
        }
    }
    let to_std = |coeffs: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; n_std];
        let mut r = rhs;
        for (i, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match reprs[i] {
                VarRepr::Shift { std, offset } => {
                    row[std] += a;
                    r -= a * offset;
                }
                VarRepr::NegShift { std, offset } => {
                    row[std] -= a;
                    r -= a * offset;
                }
                VarRepr::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        (row, r)
    };

    // Rows: inequalities (slack), range rows (slack), equalities (none).
    let n_ineq = p.ineq.len() + range_rows.len();
    let m = n_ineq + p.eq.len();
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::with_capacity(m);
    for (coeffs, rhs) in &p.ineq {
        let (row, r) = to_std(coeffs, *rhs);
        rows.push((row, r, true));
    }
    for &(var, ub) in &range_rows {
        let mut row = vec![0.0; n_std];
        row[var] = 1.0;
        rows.push((row, ub, true));
    }
    for (coeffs, rhs) in &p.eq {
        let (row, r) = to_std(coeffs, *rhs);
        rows.push((row, r, false));
    }

    let n_slack = n_ineq;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b: Vec<f64> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificial_rows: Vec<usize> = Vec::new();
    let mut slack_idx = 0usize;
    for (ri, (row, rhs, has_slack)) in rows.iter().enumerate() {
        let mut full = vec![0.0; n_std + n_slack];
        full[..n_std].copy_from_slice(row);
        let mut rr = *rhs;
        let mut slack_sign = 0.0;
        if *has_slack {
            slack_sign = 1.0;
            full[n_std + slack_idx] = 1.0;
            slack_idx += 1;
        }
        if rr < 0.0 {
            for v in &mut full {
                *v = -*v;
            }
            rr = -rr;
            slack_sign = -slack_sign;
        }
        if slack_sign > 0.0 {
            basis.push(n_std + slack_idx - 1);
        } else {
            basis.push(usize::MAX); // artificial assigned below
            artificial_rows.push(ri);
        }
        a.push(full);
        b.push(rr);
    }
    let n_art = artificial_rows.len();
    let total = n_std + n_slack + n_art;
    for (k, &ri) in artificial_rows.iter().enumerate() {
        basis[ri] = n_std + n_slack + k;
    }
    for (ri, row) in a.iter_mut().enumerate() {
        row.resize(total, 0.0);
        if basis[ri] >= n_std + n_slack {
            let col = basis[ri];
            row[col] = 1.0;
        }
    }

    let mut t = Tableau {
        cols: total,
        a,
        b,
        basis,
        iterations: 0,
    };

    // Phase 1: drive artificials to zero.
    if n_art > 0 {
        let mut cost = vec![0.0; total];
        for c in cost.iter_mut().skip(n_std + n_slack) {
            *c = -1.0;
        }
        let allowed = vec![true; total];
        match t.run_phase(&cost, &allowed)? {
            PhaseEnd::Unbounded => {
                return Err(LpError::Malformed("phase 1 unbounded".into()));
            }
            PhaseEnd::Optimal(v) => {
                let scale = t.b.iter().fold(1.0f64, |mx, x| mx.max(x.abs()));
                if v < -PHASE1_TOL * scale {
                    return Ok(LpOutcome::status_only(LpStatus::Infeasible));
                }
            }
        }
        // Pivot or drop any artificial still basic, then ban those columns.
        let mut drop_rows = Vec::new();
        for r in 0..t.a.len() {
            if t.basis[r] >= n_std + n_slack {
                let col = (0..n_std + n_slack).find(|&j| t.a[r][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        let mut dummy_red = vec![0.0; total];
                        let mut dummy_val = 0.0;
                        t.pivot(r, j, &mut dummy_red, &mut dummy_val);
                    }
                    None => drop_rows.push(r),
                }
            }
        }
        for &r in drop_rows.iter().rev() {
            t.a.remove(r);
            t.b.remove(r);
            t.basis.remove(r);
        }
    }

    // Phase 2 on the structural objective (artificial columns banned).
    let (obj_std, _) = to_std(&p.objective, 0.0);
    let mut cost = vec![0.0; total];
    cost[..n_std].copy_from_slice(&obj_std);
    let mut allowed = vec![true; total];
    for item in allowed.iter_mut().skip(n_std + n_slack) {
        *item = false;
    }
    match t.run_phase(&cost, &allowed)? {
        PhaseEnd::Unbounded => Ok(LpOutcome::status_only(LpStatus::Unbounded)),
        PhaseEnd::Optimal(_) => {
            let mut x_std = vec![0.0; total];
            for (r, &bv) in t.basis.iter().enumerate() {
                x_std[bv] = t.b[r];
            }
            let x: Vec<f64> = reprs
                .iter()
                .map(|repr| match *repr {
                    VarRepr::Shift { std, offset } => offset + x_std[std],
                    VarRepr::NegShift { std, offset } => offset - x_std[std],
                    VarRepr::Split { pos, neg } => x_std[pos] - x_std[neg],
                })
                .collect();
            let objective_value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
            Ok(LpOutcome {
                status: LpStatus::Optimal,
                point: Some(x),
                objective_value: Some(objective_value),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub enum FeasibilityOutcome {
    Feasible { point: Vec<f64>, margin: f64 },
    Infeasible,
}

/// Maximize a shared margin t over a mixed strict/weak inequality system:
/// strict rows a . x > b become a . x >= b + t, weak rows a . x >= b stay,
/// plus equality rows and variable bounds. t is capped at [`MARGIN_CAP`];
/// the system counts as feasible when the maximized t reaches `eps_min`.
pub fn lp_feasibility_with_margin(
    strict: &[(Vec<f64>, f64)],
    weak: &[(Vec<f64>, f64)],
    eq: &[(Vec<f64>, f64)],
    bounds: &[(Option<f64>, Option<f64>)],
    eps_min: f64,
) -> Result<FeasibilityOutcome, LpError> {
    let n = bounds.len();
    let mut p = LpProblem::new(n + 1);
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    p.maximize(obj);
    for (i, &(lo, up)) in bounds.iter().enumerate() {
        p.set_bounds(i, lo, up);
    }
    p.set_bounds(n, None, Some(MARGIN_CAP));
    let widen = |coeffs: &[f64], t_coef: f64| -> Vec<f64> {
        assert_eq!(coeffs.len(), n, "row width");
        let mut row = coeffs.to_vec();
        row.push(t_coef);
        row
    };
    for (coeffs, rhs) in strict {
        // a . x - t >= b
        p.add_geq(widen(coeffs, -1.0), *rhs);
    }
    for (coeffs, rhs) in weak {
        p.add_geq(widen(coeffs, 0.0), *rhs);
    }
    for (coeffs, rhs) in eq {
        p.add_eq(widen(coeffs, 0.0), *rhs);
    }
    let out = lp_solve(&p)?;
    match out.status {
        LpStatus::Infeasible => Ok(FeasibilityOutcome::Infeasible),
        LpStatus::Unbounded => Err(LpError::Malformed(
            "margin LP cannot be unbounded with a capped margin".into(),
        )),
        LpStatus::Optimal => {
            let mut point = out.point.unwrap();
            let margin = point.pop().unwrap();
            if margin >= eps_min {
                Ok(FeasibilityOutcome::Feasible { point, margin })
            } else {
                Ok(FeasibilityOutcome::Infeasible)
            }
        }
    }
}

/// Copositive Schur certificate for an elementwise-nonnegative matrix:
/// a vector d in [1, d_max]^n with M d < d proves rho(M) < 1.
pub fn schur_certificate(
    m: &Matrix,
    d_max: f64,
    eps_min: f64,
) -> Result<Option<(Vec<f64>, f64)>, LpError> {
    assert!(m.is_square(), "schur certificate needs a square matrix");
    let n = m.rows();
    let strict: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let coeffs: Vec<f64> = (0..n)
                .map(|j| (if i == j { 1.0 } else { 0.0 }) - m[(i, j)])
                .collect();
            (coeffs, 0.0)
        })
        .collect();
    let bounds = vec![(Some(1.0), Some(d_max)); n];
    match lp_feasibility_with_margin(&strict, &[], &[], &bounds, eps_min)? {
        FeasibilityOutcome::Feasible { point, margin } => Ok(Some((point, margin))),
        FeasibilityOutcome::Infeasible => Ok(None),
    }
}
