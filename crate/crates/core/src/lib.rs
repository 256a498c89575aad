//! Dictionary learning for sparse representation.
//!
//! * [`model`]: training/dictionary/code types and the fit function.
//! * [`proxops`]: shrinkage, projections, spectral estimates, ridge update.
//! * [`bsum`]: block successive upper-bound minimization learners for the
//!   four constraint regimes.
//! * [`sca`]: successive convex approximation and the constrained-fit learner.
//! * [`hardness`]: the densest-cut reduction and brute-force verifiers.
//! * [`denoise`]: patch-based image denoising with learned dictionaries.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bsum;
pub mod denoise;
pub mod error;
pub mod hardness;
pub mod linalg;
pub mod model;
pub mod proxops;
pub mod rng;
pub mod sca;

pub use error::{Error, Result};
pub use model::{
    check_feasible, grad_a, grad_x, objective, CodeMatrix, ConstraintRegime, Dictionary, SolverConfig, SolverTrace,
    StopReason, TrainingMatrix,
};
