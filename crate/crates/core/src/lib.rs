//! Thompson Sampling for Bayesian contextual bandits with exact posteriors.
//!
//! - [`model`]: parameter grids, feature maps and likelihood families.
//! - [`belief`]: exact discrete and conjugate Gaussian posteriors.
//! - [`agent`]: posterior sampling and the induced action distribution.
//! - [`environment`]: context adversaries and the interaction loop.
//! - [`infodiag`]: per-round regret, information gain and ratio diagnostics.
//! - [`geometry`]: covers, lattice priors and closed-form regret bounds.
//! - [`harness`]: configuration, batch runs, output files and verification suites.

pub mod agent;
pub mod belief;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod infodiag;
pub mod model;

pub use error::{Error, Result};
