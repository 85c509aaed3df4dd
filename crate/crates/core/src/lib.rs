//! Decision-tree classifiers for soil fertility data: C4.5 (J48), CART,
//! NBTree, correlation-based attribute selection, AdaBoost.M1 and a
//! stratified cross-validation harness.
//!
//! ```
//! use soilcast::evaluation::cross_validate;
//! use soilcast::pipeline::{BaseLearner, Pipeline};
//! use soilcast::synth::synthesize_soil_dataset;
//!
//! let d = synthesize_soil_dataset(300, 7, 2.0).unwrap();
//! let report = cross_validate(&d, &Pipeline::base(BaseLearner::j48()), 5, 1).unwrap();
//! assert_eq!(report.total(), 300);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaboost;
pub mod c45;
pub mod cart;
pub mod cfs;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod measures;
pub mod nbtree;
pub mod persist;
pub mod pipeline;
pub mod synth;
pub mod tree;

pub use dataset::{AttributeSpec, Cell, Dataset, Instance};
pub use error::{Error, Result};
pub use pipeline::{BaseLearner, Model, Pipeline};
