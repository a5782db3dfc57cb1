//! Continuum model of a rotating ant mill: steady states, nonlinear radial
//! evolution, linear stability and the turning-kernel Fredholm operator.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod evolve;
pub mod fredholm;
pub mod numerics;
pub mod params;
pub mod stability;
pub mod steady;

pub use error::{Error, Result};
