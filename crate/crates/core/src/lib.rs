//! Max-min SINR precoding for RIS-assisted multi-user MISO downlinks.
//!
//! The crate covers the channel model, the exact fixed-point precoder, closed
//! forms for rank-one BS–RIS links, large-system deterministic equivalents,
//! a projected-gradient phase optimizer, amplify-and-forward relay baselines
//! and a seeded Monte-Carlo experiment runner.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod olp;
pub mod parallel;
pub mod phase_opt;
pub mod rankone;
pub mod relay;
pub mod rng;

pub use error::{Error, Result};
