//! Bayesian optimization of variational quantum eigensolvers.
//!
//! [`sim`] simulates the quantum device, [`gp`] holds the surrogate model,
//! [`acquisition`] scores candidate measurements, [`optim`] runs the
//! optimizers and [`harness`] drives multi-seed experiments.

pub mod acquisition;
pub mod error;
pub mod exec;
pub mod gp;
pub mod harness;
pub mod optim;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
