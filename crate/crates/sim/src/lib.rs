//! Finite-dimensional random-matrix models of free Lévy processes and Monte
//! Carlo estimates of their partition-dependent measures.
//!
//! Two models are provided. For a free Poisson process of rate `λ`, the
//! increment over `I` is `s p(I) s` with `s` a GUE matrix and `p(I)` a
//! diagonal projection of normalised trace `λ|I|`. For a free Brownian motion
//! the increments are independent GUE matrices scaled by `√|I|`.

pub mod blocks;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod operators;

pub use ensemble::{sample_increments, IncrementSet, MatrixEnsembleConfig, Model};
pub use error::{Result, SimError};
pub use operators::{pr_matrix, st_matrix, Operator};
