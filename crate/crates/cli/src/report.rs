//! JSON building blocks shared by the commands.

use std::time::{SystemTime, UNIX_EPOCH};

use rfdi_core::dataset::{is_double_imbalanced, ImbalanceStats, DEFAULT_DA_MIN, DEFAULT_IR_MIN};
use rfdi_core::forest::{ConfusionMatrix, Decision, ForestConfig, Metrics, MinorityMode, Sampling};
use serde::Serialize;

use crate::args::{ModelArgs, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub data: String,
    pub target: String,
    pub minority_label: String,
    pub model: ModelKind,
    pub sampling: Sampling,
    pub brf_minority_mode: MinorityMode,
    pub decision: Decision,
    pub trees: usize,
    pub mtry: usize,
    pub nodesize: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<f64>,
    /// Seconds since the Unix epoch; the only non-deterministic field.
    pub timestamp: Option<u64>,
}

impl ConfigEcho {
    pub fn new(args: &ModelArgs, cfg: &ForestConfig, minority_label: &str) -> Self {
        Self {
            data: args.data.display().to_string(),
            target: args.target.clone(),
            minority_label: minority_label.to_owned(),
            model: args.model,
            sampling: cfg.sampling,
            brf_minority_mode: cfg.brf_minority_mode,
            decision: cfg.decision,
            trees: cfg.n_trees,
            mtry: cfg.tree.mtry,
            nodesize: cfg.tree.nodesize,
            max_depth: cfg.tree.max_depth,
            seed: args.seed,
            runs: None,
            holdout: None,
            timestamp: None,
        }
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    #[serde(flatten)]
    pub stats: ImbalanceStats,
    pub double_imbalanced: bool,
}

impl DatasetStats {
    pub fn new(stats: &ImbalanceStats) -> Self {
        Self {
            stats: *stats,
            double_imbalanced: is_double_imbalanced(stats, DEFAULT_IR_MIN, DEFAULT_DA_MIN),
        }
    }

    /// Advisory warning when the data is outside the double-imbalance regime.
    pub fn warn_if_outside(&self) {
        if !self.double_imbalanced {
            eprintln!(
                "warning: data is not double-imbalanced (ir = {:.3}, n/p = {:.1}; gates {DEFAULT_IR_MIN}, {DEFAULT_DA_MIN})",
                self.stats.ir, self.stats.da
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            sd: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsBlock {
    pub decision: Decision,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl MetricsBlock {
    pub fn new(decision: Decision, confusion: ConfusionMatrix) -> Self {
        Self {
            decision,
            confusion,
            metrics: confusion.metrics(),
        }
    }
}
