//! Wavelet packet simulation of k-factor Gegenbauer processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filters;
pub mod gegenbauer;
pub mod analysis;
pub mod bestbasis;
pub mod cli;
pub mod simulate;
pub mod wpt;

pub use error::{Error, Result};
