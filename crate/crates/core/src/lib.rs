//! Short-term electrical load forecasting for individual consumers.

pub mod app;
pub mod classifier;
pub mod data;
mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod strategies;
pub mod synth;
pub mod tuner;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
