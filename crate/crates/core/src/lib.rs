//! Per-person risky-choice prediction.
//!
//! A factorization machine over one-hot subject/game vectors and a
//! regularized linear model over hand-built gamble features are fitted
//! separately, then blended by a small ridge regression fitted on a held-out
//! validation fold.

pub mod cli;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod fm;
pub mod linear;
pub mod seed;

mod io;

pub use error::{Error, Result};
