//! Multi-purpose binomial trees.
//!
//! A two-drift, two-probability lattice that contains the Cox-Ross-Rubinstein,
//! Jarrow-Rudd and Tian trees as special cases, with tools to check its
//! moments against geometric Brownian motion, measure its convergence rate,
//! price European claims under a hedge-based risk-neutral probability,
//! calibrate to option chains and estimate the physical up probability from
//! return data.
//!
//! The `examples/` directory has one runnable program per capability.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod calibration;
pub mod cli;
pub mod convergence;
pub mod error;
pub mod io;
pub mod lattice;
pub mod model;
pub mod optimize;
pub mod special;
pub mod stats;

pub use calibration::{
    calibrate, calibrate_all, error_metrics, model_prices, CalibrationConfig, CalibrationResult,
    ErrorMetrics, OptionQuote, TreeModel,
};
pub use convergence::{kolmogorov_distance, rate_experiment, terminal_distribution, DiscreteCdf, Measure};
pub use error::{Assumption, Error, Result};
pub use lattice::{price_european, risk_neutral_prob, Lattice, Payoff, ProbabilityRule};
pub use model::{FactorForm, ModelParams, StepFactors};
pub use optimize::{minimize, Bound, MinimizeConfig, Minimum};
