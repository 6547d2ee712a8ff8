//! Weak biorthogonal greedy algorithms over finite-dimensional ℓ_p spaces.

pub mod algorithms;
pub mod diagnostics;
pub mod dictionary;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod perturbation;
mod rng;
pub mod selftest;
pub mod solvers;
pub mod space;

pub use error::{GreedyError, Result};
