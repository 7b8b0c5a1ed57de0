//! Confidence calibration for binary win-probability models.
//!
//! The crate trains a small ReLU network on match-state features, calibrates
//! it after the fact with temperature, vector or matrix scaling, or trains it
//! with a data-uncertainty loss that models per-input logit noise, and scores
//! every variant with reliability diagrams, ECE, MCE and NLL. A synthetic
//! generator with known win probabilities makes true calibration measurable.
//!
//! Modules:
//!
//! * [`metrics`]: reliability bins, ECE / MCE / NLL, report and diagram output
//! * [`nn`]: network, backpropagation, Adam, training, model files
//! * [`scaling`]: post-hoc temperature / vector / matrix scalers
//! * [`du_loss`]: Monte-Carlo data-uncertainty loss and its gradient
//! * [`datagen`]: synthetic matches, dataset CSV, splits, oracle calibration error
//! * [`pipeline`]: the generate / train / calibrate / evaluate / compare workflow

pub mod datagen;
pub mod du_loss;
mod error;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod scaling;
pub mod seed;

pub use error::{Error, Result};

/// Version string recorded in every emitted artifact.
pub const TOOL_VERSION: &str = concat!("calibforge ", env!("CARGO_PKG_VERSION"));
