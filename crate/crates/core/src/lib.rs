//! Classical simulation and statistics for interleaved randomized
//! benchmarking of arbitrary (non-Clifford) gates.
//!
//! The interleaved arm never inverts the random sequence. Instead the ideal
//! state of each sequence is computed classically and its overlap with the
//! noisy state is estimated by importance-sampling Pauli measurements.
//!
//! Modules:
//! - [`pauli`]: normalized Pauli basis, χ-vectors and measurement-operator sampling.
//! - [`clifford`]: exact Clifford tableaux with uniform sampling.
//! - [`noise`]: Kraus channels and density-matrix simulation of gate sequences.
//! - [`statistics`]: shot budgets, resource bounds, decay fitting, error extraction.
//! - [`protocols`]: standard RB, hybrid IRB and direct Monte Carlo fidelity estimation.

pub mod clifford;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod protocols;
pub mod statistics;

pub use error::{Error, Result};
