//! Resonances and eigenmodes of finite one-dimensional chains of
//! high-contrast resonators.
//!
//! The chain geometry is reduced to a structural vector of optical lengths.
//! At a resonant wavenumber the coupling structure collapses onto a
//! tridiagonal capacitance-style matrix whose block spectrum governs the
//! leading-order splitting of the resonances; transfer-matrix products
//! provide the exact characterization used for numerical refinement, and
//! closed-form expansion coefficients predict each branch to second order.
//!
//! Modules mirror that pipeline:
//!
//! - [`chain`]: geometry, structural vector, resonant index partition
//! - [`capacitance`]: coupling matrix, block factorizations, spectra
//! - [`transfer`]: transfer-matrix products and their polynomial form
//! - [`asymptotics`]: expansion coefficients and order bookkeeping
//! - [`solver`]: root location (Newton + argument-principle counting)
//! - [`eigenmode`]: mode reconstruction and trigonometric profiles
//! - [`verify`]: randomized self-check suites shared by tests and the CLI

pub mod asymptotics;
pub mod capacitance;
pub mod chain;
pub mod config;
pub mod dd;
pub mod eigenmode;
pub mod error;
pub mod linalg;
pub mod rational;
pub mod solver;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Rat;
