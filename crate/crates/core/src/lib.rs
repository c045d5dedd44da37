//! Random forests for binary classification under double imbalance
//! (skewed classes together with many more rows than predictors).
//!
//! The crate covers the whole pipeline:
//!
//! * [`dataset`]: CSV loading, ordinal encoding, imbalance statistics and
//!   resampling helpers.
//! * [`synthgen`]: a two-class simulator with factor, linear, non-linear and
//!   pure-noise predictors.
//! * [`tree`]: CART trees grown to purity with per-node feature subsetting.
//! * [`forest`]: standard and balanced bootstrap forests, OOB estimates, the
//!   quantile (prevalence-threshold) decision rule and imbalance metrics.
//! * [`depthselect`]: minimal depth, null minimal-depth distributions with the
//!   standard and sample-size adjusted variable counts, and thresholded
//!   feature selection.

pub mod dataset;
pub mod depthselect;
mod error;
pub mod forest;
pub mod seed;
pub mod synthgen;
pub mod tree;

pub use dataset::{Dataset, FeatureSchema, ImbalanceStats};
pub use depthselect::{AdjustmentContext, DepthDistribution, SelectionReport, ThresholdMode};
pub use error::{Error, Result};
pub use forest::{ConfusionMatrix, Decision, Forest, ForestConfig, Metrics, Sampling};
pub use synthgen::SimConfig;
pub use tree::{Tree, TreeConfig, TreeTopology};
