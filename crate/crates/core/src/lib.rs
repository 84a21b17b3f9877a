//! Imbalance-aware training and evaluation of binary network-flow
//! classifiers.
//!
//! The crate covers the full experiment pipeline: loading flow-record CSVs
//! (or generating synthetic imbalanced traffic), preprocessing, feature
//! selection, minority oversampling, seven from-scratch classifiers, and an
//! evaluation harness that compares models trained on imbalanced versus
//! rebalanced data.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod preprocess;
pub mod sample;
pub mod schema;
pub mod select;
pub mod synth;

pub use data::{Dataset, FlowRecord, Matrix};
pub use error::{Error, Result};
pub use schema::Schema;
