//! Two-step robust estimation of multivariate location and scatter for data
//! with cellwise and casewise outliers.
//!
//! Suspect cells are first removed by a univariate + bivariate filter and then
//! treated as missing by an S-estimator for incomplete data, started from a
//! subsampling-based initial estimate.

pub mod data;
pub mod error;
pub mod filter;
pub mod init;
pub mod kernels;
pub mod lab;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod sest;

pub use data::{Dataset, Mask};
pub use error::{Error, Result};
