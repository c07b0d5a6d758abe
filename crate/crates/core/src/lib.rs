//! Stochastic simulation of two-state SIS models with demographic
//! stochasticity.
//!
//! The library covers the whole pipeline from the discrete jump model to
//! its diffusion limit and back:
//!
//! - [`transition`]: the nine-move jump table, its drift vector, covariance
//!   matrix and symmetric matrix square root, and a fixed-step jump-chain
//!   simulator usable as a distributional oracle.
//! - [`coefficients`]: truncated Hoelder-continuous SDE coefficients (the
//!   quadratic diffusion `bar_g` and clamped drift `bar_a`) plus empirical
//!   validation of their growth/Hoelder/Lipschitz constants.
//! - [`drivers`]: nested dyadic partitions and correlated two-dimensional
//!   Brownian increment grids with exact coarse-from-fine refinement.
//! - [`engine`]: the explicit left-endpoint (Euler-Peano) scheme, the
//!   square-root driving process, triangular and full two-dimensional
//!   systems, and deterministic seeded ensembles.
//! - [`diagnostics`]: runnable versions of the convergence analysis (theta
//!   test functions, uniform bounds, inter-level Cauchy errors, pathwise
//!   uniqueness checks).
//! - [`fokker_planck`]: lattice master-equation stepping and an explicit
//!   finite-difference forward-equation solver as distribution-level
//!   oracles.
//! - [`cli`]: scenario configuration, execution and CSV serialization for
//!   the `sis-sde` binary.

pub mod cli;
pub mod coefficients;
pub mod diagnostics;
pub mod drivers;
pub mod engine;
pub mod error;
pub mod fokker_planck;
pub mod transition;

pub use error::{Result, SimError};
