//! Simulation, drift estimation and asymptotic constants for the fractional
//! Ornstein-Uhlenbeck process `dX_t = -θ X_t dt + σ dB^H_t`, `X_0 = 0`.
//!
//! Module map:
//!
//! - [`fbm`]: fractional Brownian motion covariance, exact samplers and the
//!   `H`-inner product of step functions.
//! - [`fou`]: path simulation, integrated square and exact covariances.
//! - [`estimators`]: the least-squares drift estimator (oracle form), the
//!   moment-inversion estimator, the pathwise estimator and the Itô estimator.
//! - [`asymptotics`]: closed-form limit constants and their numerical oracles.
//! - [`harness`]: Monte Carlo experiments, configuration files and reports.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod fbm;
pub mod fou;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{FouError, Result};
pub use fbm::{FbmMethod, HurstParameter, PathLabel, SamplePath, TimeGrid};
pub use fou::{FouParams, Scheme};
