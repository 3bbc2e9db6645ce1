//! Variance-optimal hedging of discretely monitored barrier options in
//! exponential Lévy models on a recombining multinomial lattice.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bs;
pub mod calibration;
pub mod distribution;
pub mod engine;
pub mod error;
pub mod grid;
pub mod market;
pub mod mc;
pub mod normal;
pub mod pricing;
pub mod reports;

pub use error::{Error, Result};
pub use market::{Calendar, MarketParams, TimeSpan};
