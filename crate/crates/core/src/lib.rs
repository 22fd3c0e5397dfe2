//! Simulation and bootstrap inference for smooth functional time series.
//!
//! The crate models a first-order functional autoregression
//! `X_t = Psi(X_{t-1}) + eps_t` whose states are smooth curves on `[0, 1]`,
//! estimates the regression operator `Psi` with a functional
//! Nadaraya-Watson kernel smoother, and regenerates pseudo-series through
//! the autoregression (residual) bootstrap. A seeded Monte Carlo harness
//! checks that the bootstrap world reproduces the sampling distribution of
//! the estimator at desk scale.
//!
//! Module map:
//! - [`function_space`]: discretized curves, norms, cosine basis, covering.
//! - [`process_models`]: innovation models, regression operators, the
//!   FAR(1) simulator.
//! - [`kernel_regression`]: the Nadaraya-Watson estimator, small-ball
//!   probabilities, kernel limit moments, bandwidth schedules.
//! - [`ar_bootstrap`]: residual extraction, resampling, pseudo-series
//!   generation and the coupled diagnostic process.
//! - [`distances`]: exact Mallows (Wasserstein) distances between empirical
//!   laws via optimal assignment, plus scalar distribution distances.
//! - [`experiment`]: config-driven, reproducible validation experiments and
//!   their CSV/JSON reports.

pub mod ar_bootstrap;
pub mod distances;
pub mod error;
pub mod experiment;
pub mod function_space;
pub mod kernel_regression;
pub mod process_models;
pub mod seeds;

pub use error::{Error, Result};
