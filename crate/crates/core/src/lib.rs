//! Simulator for diversity pulse shaped transmission (DPST) over correlated
//! 2×2 MIMO small-cell links.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod link;
pub mod network;
pub mod numerics;
pub mod pulse;

pub use error::{Error, Result};
