//! Bayesian inference for exponential-family models with intractable
//! normalizing constants.

pub mod diagnostics;
pub mod emulation;
pub mod error;
pub mod harness;
pub mod inner;
pub mod models;
pub mod numeric;
pub mod outer;
pub mod rng;

pub use error::{Error, Result};
