//! Single-step structured quantum search for highly constrained k-SAT.
//!
//! The crate simulates the algorithm `φ = U·R·ψ` exactly on a state vector of
//! `2^n` complex amplitudes:
//!
//! * `ψ` is the uniform superposition over all assignments,
//! * `R` multiplies each amplitude by `i^c`, where `c` is an estimate of the
//!   number of conflicts the assignment would have in the maximally
//!   constrained 1-SAT problem sharing the instance's solution,
//! * `U` mixes amplitudes with entries `2^(-n/2)·(-i)^d` that depend only on
//!   Hamming distance, and is applied as `W·Γ·W` with a fast Walsh transform.
//!
//! Around that core sit the SAT data model ([`sat`]), planted-solution
//! ensembles ([`ensembles`]), the conflict estimators ([`estimators`]), the
//! error analysis ([`analysis`]), a classical GSAT baseline ([`gsat`]) and
//! a deterministic experiment harness ([`harness`]).

pub mod analysis;
pub mod combinatorics;
pub mod ensembles;
mod error;
pub mod estimators;
pub mod gsat;
pub mod harness;
mod kv;
pub mod quantum;
pub mod sat;

pub use error::{Error, Result};

/// Largest `n` for which dense state vectors and brute-force enumeration are
/// allowed unless a caller overrides it (2^24 amplitudes = 256 MiB).
pub const DEFAULT_STATE_CAP: u32 = 24;
