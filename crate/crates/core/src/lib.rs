//! Stochastic calculus via regularization on discretely sampled paths.
//!
//! The crate estimates forward integrals and quadratic variations on uniform
//! grids, tests the A-martingale property of simulated processes, solves the
//! hedging PDEs for European, multi-date and Asian claims and replicates them
//! along non-semimartingale paths, and scans log-utility portfolios.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amartingale;
pub mod calculus;
pub mod error;
pub mod hedging;
pub mod paths;
pub mod portfolio;
pub mod quad;
pub mod regularize;
pub mod stats;

pub use error::{Error, Result};
pub use paths::{PathEnsemble, PriceModel, SamplePath, TimeGrid};
pub use regularize::RegParams;
