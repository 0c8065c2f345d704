//! Weighted score-level fusion of probabilistic classifiers for tabular
//! heart-disease data.
//!
//! The crate covers the full experiment: loading and cleaning the data,
//! training six classifiers, fusing pairs of their probability outputs
//! with a searched weight, and reporting accuracy, precision, recall, F1
//! and ROC-AUC.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod scores;
pub mod seed;

pub use error::{Error, Result};
