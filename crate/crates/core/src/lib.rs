//! Exact computation with partition-dependent free stochastic measures.
//!
//! The crate is organised bottom-up:
//!
//! * [`partitions`]: set partitions, noncrossing partitions, Kreweras
//!   complements, outer/inner classes and Möbius functions.
//! * [`cumulants`]: joint moments and free cumulants over subsets, and the
//!   Möbius transforms between them.
//! * [`processes`]: processes with free increments given by their unit-time
//!   cumulants, subdivisions, interval scaling and derived diagonal tuples.
//! * [`measures`]: expectations of the Riemann sums `St_π`, `Pr_π`, of their
//!   products and of their limits, plus residual checkers for the
//!   factorisation identities these measures satisfy.
//!
//! All scalars are exact rationals ([`ExactScalar`]).

pub mod cumulants;
pub mod error;
pub mod measures;
pub mod partitions;
pub mod processes;
pub mod scalar;

pub use error::{Error, Result};
pub use partitions::{ClassSplit, Lattice, Partition};
pub use scalar::ExactScalar;
