//! Item response models whose latent trait lives on the real line, on
//! `(0, ∞)`, or on a bounded interval `(0, R)`.
//!
//! The crate covers the whole workflow:
//!
//! - [`model`]: item characteristic curves, links, slopes and inversion;
//! - [`mcmc`]: Metropolis-within-Gibbs estimation, R-hat and DIC;
//! - [`anchoring`]: anchor intervals and empirical performance levels;
//! - [`regression`]: latent-trait regression on covariates with fixed items;
//! - [`simulation`]: synthetic data and parameter-recovery summaries;
//! - [`io`]: CSV ingestion, JSON reports and the `birt` command line.

pub mod anchoring;
pub mod data;
pub mod error;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod regression;
pub mod simulation;

pub use data::ResponseMatrix;
pub use error::{IrtError, Result};
pub use model::{icc, icc_invert, icc_slope_at_b, AbilitySpace, ItemParameters, Link};
