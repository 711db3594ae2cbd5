//! Numerical estimation of mean dimension, infinite entropy dimension, Katok ε-entropy,
//! rate-distortion and pressure for shift systems over `Z^d`.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod dimensions;
pub mod error;
pub mod group_actions;
pub mod measures;
pub mod metric_spaces;
pub mod packing;
pub mod pressure;
pub mod rate_distortion;
pub mod shift_systems;
pub mod verify;

pub use error::{Error, Result};
