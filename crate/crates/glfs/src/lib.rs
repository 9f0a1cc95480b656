//! Gradient-based Laplacian feature selection.
//!
//! Selects features by minimizing the trace of the Laplacian-regularized
//! least-squares parameter covariance over a nonnegative, l1-penalized
//! feature-weight vector, with baseline selectors (Laplacian Score, greedy
//! trace/determinant variance minimization) and an evaluation harness
//! (simulation, k-means + NMI, spectral clustering, leave-one-out 1-NN,
//! LapRLS classification with cross-validation).

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod objective;
pub mod optimizer;
mod parallel;
pub mod rng;

pub use data::{DataMatrix, FeatureWeights};
pub use error::{Error, Result};
