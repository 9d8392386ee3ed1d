//! Outage probability of an IRS-assisted multi-user MISO downlink with MRT
//! precoding over Rayleigh fading.
//!
//! The analytic path fits Log-Normal laws to the SINR numerator and
//! denominator by matching closed-form first and second moments, then
//! evaluates the Log-Normal CDF of their ratio. The Monte-Carlo path draws
//! the channels directly and serves as the reference for every closed form.
//!
//! ```
//! use irs_outage::experiments::{analytic_op, Scenario};
//! use irs_outage::model::db_to_linear;
//!
//! let scenario = Scenario::reference(1);
//! let op = analytic_op(&scenario, 0, db_to_linear(0.0)).unwrap();
//! assert!((0.0..=1.0).contains(&op));
//! ```

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod lognormal;
pub mod model;
pub mod moments;
pub mod oracle;

pub use error::{Error, Result};
