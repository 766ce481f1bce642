//! Positive interval observers with stabilizing feedback for discrete-time
//! positive linear systems.
//!
//! The crate is organized around five building blocks:
//!
//! - [`linalg`]: dense real matrices, spectral radii, eigenvalues and linear
//!   solves sized for desk-scale control problems (n ≲ 20).
//! - [`lp`]: a small dense two-phase simplex solver, plus a margin-maximizing
//!   feasibility front end used for all gain-synthesis programs.
//! - [`model`]: the system/gain data model and every certification check on a
//!   candidate design (cone-invariance conditions, generic necessary
//!   conditions, noise conditions, Schur stability of all closed-loop blocks).
//! - [`synthesis`]: LP-based synthesis of observer and feedback gains, with a
//!   decoupled mode and a staged coupled mode that also positivizes dynamics
//!   with negative entries, plus constructive counterexample generation for
//!   violated invariance conditions.
//! - [`sim`]: deterministic and stochastic closed-loop simulation, seeded
//!   gamma noise, Monte Carlo ensemble means and the expected fixed point of
//!   the noisy closed loop.
//!
//! [`fixtures`] bundles the demo systems used by the CLI and tests.

pub mod fixtures;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod rng;
pub mod sim;
pub mod synthesis;

pub use linalg::Matrix;
pub use model::{ConditionId, ConditionReport, GainSet, PositiveSystem};
