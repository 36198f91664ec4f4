//! Classification trees with surrogate splits and cost-complexity pruning,
//! tree-driven predictor selection for fixed and random-intercept logistic
//! models, and a repeated-split evaluation harness for nested
//! (student/class/school) data.

pub mod cart;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod metrics;
pub mod par;
pub mod preprocess;
pub mod regression;

pub use error::{Error, Result};
