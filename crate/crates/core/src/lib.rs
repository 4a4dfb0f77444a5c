//! Pest-presence prediction from weather, vegetation-index and trap-catch
//! time series with an explainable boosting machine.
//!
//! The pipeline runs in five stages:
//!
//! * [`dataset`] loads trap, weather and vegetation-index CSVs and joins them
//!   into per-visit raw instances.
//! * [`features`] turns raw instances into a standardized feature matrix.
//! * [`ebm`] trains and serializes the additive model (main effects plus
//!   pairwise interactions, logit link).
//! * [`explain`] produces global importance and local contribution reports.
//! * [`eval`] runs repeated random splits and leave-one-trap-out evaluation.
//!
//! [`synthgen`] emits a seeded synthetic trap network in the same CSV schemas.

pub mod cli;
pub mod dataset;
pub mod ebm;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod json;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};
