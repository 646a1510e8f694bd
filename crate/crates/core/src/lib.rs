//! Simulation and numerical checks for a non-homogeneous birth–death chain
//! that models the race between the two longest arms of diffusion limited
//! aggregation in a sub-linear wedge, plus the lattice DLA process itself.
//!
//! * [`chain`]: exact dynamics, Doob decomposition, coupled reflected walk,
//!   and a dynamic-programming law of `D_n`.
//! * [`bounds`]: the exponent recipe and the closed-form tail bounds.
//! * [`estimators`]: deterministic Monte Carlo ensembles.
//! * [`dla`]: lattice DLA in the wedge `0 <= y <= x^α`.
//! * [`config`] and [`app`]: the command-line front end.

pub mod app;
pub mod bounds;
pub mod chain;
pub mod config;
pub mod dla;
pub mod error;
pub mod estimators;
pub mod rng;

pub use error::{Error, Result};
