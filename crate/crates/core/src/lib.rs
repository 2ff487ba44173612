//! Nonconvex low-rank matrix recovery by iteratively reweighted nuclear norm
//! minimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`penalty`]: concave singular-value penalties and their supergradients.
//! - [`prox`]: SVD and the weighted singular value thresholding kernel.
//! - [`problems`]: smooth losses (matrix completion, linear measurements,
//!   tensor low-rank representation).
//! - [`solver`]: the single-block reweighted solver with continuation.
//! - [`multiblock`]: the parallel-splitting variant for several blocks.
//! - [`harness`]: synthetic data, metrics, experiment drivers and file IO.

pub mod error;
pub mod harness;
pub mod multiblock;
pub mod penalty;
pub mod problems;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
pub use multiblock::{
    irnn_ps_solve, irnn_ps_step, BlockLoss, BlockProblem, BlockSchedule, BlockSolverConfig,
    BlockState,
};
pub use penalty::{ExtendedWeight, PenaltyKind, PenaltyParams};
pub use prox::{svd, svt, wsvt, SvdFactors, WeightVector};
pub use solver::{
    continuation_solve, irnn_solve, irnn_step, ContinuationSchedule, Initialization,
    SolverConfig, SolverTrace, WeightRule,
};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
