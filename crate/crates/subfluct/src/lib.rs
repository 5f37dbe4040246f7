//! Fluctuations of Birkhoff sums along fixed points of primitive
//! substitutions.
//!
//! The crate is organised bottom-up:
//!
//! * [`substitution`]: parsing, incidence matrices, fixed points, Birkhoff sums
//! * [`spectral`]: exact/float eigen-decomposition and Perron–Frobenius data
//! * [`path_space`]: the prefix automaton states, path codings and the adic successor
//! * [`measures`]: Markov kernels and path measures on the automaton
//! * [`coboundary`]: coboundary equations, limit variances, discrepancy classification
//! * [`lab`]: numerical experiments comparing finite-N laws with their limits

pub mod coboundary;
pub mod lab;
pub mod linalg;
pub mod measures;
pub mod path_space;
pub mod poly;
pub mod scalar;
pub mod spectral;
pub mod substitution;

mod error;

pub use error::Error;
pub use scalar::{Exactness, Scalar};
pub use substitution::{Letter, Substitution, Word};
