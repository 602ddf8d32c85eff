//! Anti-interception transmission with true/fake frequency multiplexing.
//!
//! True signals ride on a subset of bands while decoys occupy the rest; the
//! bands overlap non-orthogonally so the decoys mask the true signals at an
//! eavesdropper that cannot cancel them. The crate provides the SINR model,
//! the alternating secrecy-rate optimizer with its deception constraints,
//! the Newton fit of the multiplexing factor, and a Monte-Carlo harness over
//! Rician fading.

pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod multiplexing;
pub mod optimizer;
pub mod simulation;
pub mod sinr;

pub use error::{Error, Infeasibility, Result};
