//! Markov chain samplers for strongly Rayleigh measures and determinantal
//! point processes.
//!
//! Three chains are provided: add-delete, exchange on a fixed cardinality
//! shell, and a projection chain that moves through the cardinality levels
//! of the symmetric homogenization without materializing it. Small ground
//! sets can be handled exactly through [`exact`], which enumerates the
//! stationary law, builds transition matrices and computes total variation
//! mixing times.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod diagnostics;
pub mod dpp;
pub mod error;
pub mod exact;
pub mod measures;
pub mod rng;
pub mod subset;

pub use chains::{run_chain, run_chains, ChainKind, ChainSpec, DeleteFactor, InitStrategy, Transcript};
pub use dpp::{LEnsemble, MarginalKernel};
pub use error::{Error, Result};
pub use measures::{ChainEvaluator, Measure};
pub use subset::{ElementId, LogWeight, Move, SubsetState};
