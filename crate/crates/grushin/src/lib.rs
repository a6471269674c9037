//! Bordered (Grushin) systems and effective Hamiltonians for dense complex
//! matrices and one-dimensional discretized operators.
//!
//! The crate is `no_std` and needs only `alloc`. All routines are pure
//! functions of their inputs.

#![no_std]

extern crate alloc;

pub mod bvp1d;
pub mod error;
pub mod grushin_core;
pub mod linops;
pub mod perturbation;
pub mod pseudoinverse;
pub mod pseudospectra;
pub mod rng;
pub mod traces;

pub use error::{Error, Result};
pub use linops::{CMatrix, Contour, SvdResult, C64};

/// Crate version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
