//! Bundled demo systems and gain sets used by the CLI `repro` subcommand
//! and by the test suites.

use crate::linalg::Matrix;
use crate::model::{GainSet, PositiveSystem};

/// Two-state plant with an unstable mode and a mixed-sign output map.
/// The single-observer necessary condition LC >= 0 admits only L = 0 here,
/// yet the bundled interval gains certify and stabilize the loop.
pub fn ex1() -> (PositiveSystem, GainSet) {
    let a = Matrix::from_rows(vec![vec![1.2, 0.2], vec![0.0, 0.2]]);
    let b = Matrix::identity(2);
    let c = Matrix::from_rows(vec![vec![1.0, -1.0]]);
    let sys = PositiveSystem::new(a, b, c).unwrap();
    let l = Matrix::column(&[0.3, 0.0]);
    let gains = GainSet::new(
        l.clone(),
        l,
        Matrix::from_rows(vec![vec![0.0, 0.3], vec![0.0, 0.0]]),
        Matrix::from_rows(vec![vec![-0.3, 0.0], vec![0.0, 0.0]]),
    );
    (sys, gains)
}

/// Variant of [`ex1`] whose dynamics matrix has a negative entry; the upper
/// feedback gain positivizes the closed loop, so the system is declared in
/// positivization mode.
pub fn ex2() -> (PositiveSystem, GainSet) {
    let a = Matrix::from_rows(vec![vec![1.2, 0.2], vec![-0.1, 0.2]]);
    let b = Matrix::identity(2);
    let c = Matrix::from_rows(vec![vec![1.0, -1.0]]);
    let sys = PositiveSystem::new(a, b, c)
        .unwrap()
        .with_positivization(true);
    let l = Matrix::column(&[0.3, -0.1]);
    let gains = GainSet::new(
        l.clone(),
        l,
        Matrix::from_rows(vec![vec![0.0, 0.3], vec![0.1, 0.0]]),
        Matrix::from_rows(vec![vec![-0.3, 0.0], vec![0.0, 0.0]]),
    );
    (sys, gains)
}

/// Two-state plant with unstable open loop, scalar process and measurement
/// noise channels (E = 0.02 I broadcast per state, F = [0.06]) and gains
/// that satisfy the invariance and noise conditions. The combined feedback
/// block A + B(K_upper + K_lower) of these gains is not Schur
/// (rho ~ 1.0099); certification reports that failure as-is.
pub fn ex3() -> (PositiveSystem, GainSet) {
    let a = Matrix::from_rows(vec![vec![0.9, 0.2], vec![0.5, 0.2]]);
    let b = Matrix::identity(2);
    let c = Matrix::from_rows(vec![vec![1.0, -1.0]]);
    let e = Matrix::identity(2).scale(0.02);
    let f = Matrix::new(1, 1, vec![0.06]);
    let sys = PositiveSystem::new(a, b, c)
        .unwrap()
        .with_noise(e, f)
        .unwrap();
    let gains = GainSet::new(
        Matrix::column(&[0.6, 0.5]),
        Matrix::column(&[0.2, 0.2]),
        Matrix::from_rows(vec![vec![0.0, 0.3], vec![0.0, 0.2]]),
        Matrix::from_rows(vec![vec![-0.3, 0.0], vec![0.0, 0.0]]),
    );
    (sys, gains)
}

/// Scalar noisy benchmark with a known expected fixed point:
/// X* = (0.2, 0.2 + 1/30, 0.1).
pub fn scalar_noisy() -> (PositiveSystem, GainSet) {
    let sys = PositiveSystem::new(
        Matrix::new(1, 1, vec![1.2]),
        Matrix::new(1, 1, vec![1.0]),
        Matrix::new(1, 1, vec![1.0]),
    )
    .unwrap()
    .with_noise(Matrix::new(1, 1, vec![0.02]), Matrix::new(1, 1, vec![0.06]))
    .unwrap();
    let gains = GainSet::new(
        Matrix::new(1, 1, vec![0.5]),
        Matrix::new(1, 1, vec![0.25]),
        Matrix::new(1, 1, vec![0.0]),
        Matrix::new(1, 1, vec![-0.6]),
    );
    (sys, gains)
}
