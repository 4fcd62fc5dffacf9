//! Numerical toolkit for the mixing function of separable quantum states.
//!
//! A separable state on `C^{n_1} ⊗ ... ⊗ C^{n_p}` is a convex combination of
//! product density matrices. The length-`k` mixing function sends `k - 1`
//! weights and `k` product terms to that convex combination. This crate
//! builds such ensembles, assembles the exact differential of the mixing
//! function, measures its numerical rank, and computes the closed-form
//! ensemble-length thresholds at which the image of the mixing function
//! switches from measure zero to containing an open set. A projected-descent
//! search produces explicit decompositions of target states.
//!
//! Modules:
//!
//! - [`herm`]: Hermitian algebra, bases, samplers, numerical rank.
//! - [`mixing`]: ensembles, the mixing map, its analytic and finite-difference
//!   Jacobians, and cokernel witnesses.
//! - [`analysis`]: exact thresholds, criticality scans, the onto witness and
//!   the degenerate span check.
//! - [`decompose`]: multi-start decomposition search and ensemble-length
//!   upper bounds.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod decompose;
pub mod error;
pub mod herm;
pub mod mixing;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use herm::{DensityMatrix, HermitianMatrix, SystemShape};
pub use decompose::{decompose, DecomposeOptions, DecomposeResult, Status};
pub use mixing::{Ensemble, GeneralEnsemble, JacobianReport, Model, PureEnsemble};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;
