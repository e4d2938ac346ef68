//! Local unambiguous discrimination of two two-qubit pure states.
//!
//! Alice holds one qubit and Bob the other. The crate builds zero-error local
//! measurement schemes for the two restricted-communication settings (no
//! communication at all, and results exchanged only after both parties have
//! measured), reports their failure probabilities against the optimal joint
//! measurement, samples them by Monte Carlo, and simulates a three-party
//! secret-sharing protocol built on the two-failure scheme.

pub mod error;
pub mod nocomm;
pub mod onefail;
pub mod output;
pub mod qlin;
pub mod qss;
pub mod sampler;
pub mod scheme;
pub mod states;
pub mod twofail;

pub use error::UsdError;
pub use qlin::{joint_probability, schmidt_decompose, tensor, Amp, QubitVec, SchmidtDecomposition, TwoQubitState};
pub use scheme::{FailureReport, KrausOp, Label, Scheme, SchemeKind};
pub use states::{idp_bound, make_state, IdpBound, StatePair};

/// Magnitudes below this are treated as exact zeros in every classification
/// decision (product-state tests, degeneracy, feasibility).
pub const ZERO_TOL: f64 = 1e-10;
