use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfdi_core::dataset::{Dataset, MinorityLabel};
use rfdi_core::forest::{Decision, ForestConfig, MinorityMode, Sampling};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "rfdi", version, about = "Imbalance-aware random forests and minimal-depth feature selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-class dataset.
    Simulate(SimulateArgs),
    /// Compare standard and adjusted minimal-depth thresholds.
    Select(SelectArgs),
    /// Train a forest and report confusion counts and metrics.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Rows drawn before downsampling.
    #[arg(long, default_value_t = 25_000)]
    pub n: usize,
    /// Target imbalance ratio.
    #[arg(long, default_value_t = 6.0)]
    pub ir: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.65)]
    pub factor_corr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Standard bootstrap, majority vote.
    Rf,
    /// Balanced bootstrap, majority vote.
    Brf,
    /// Standard bootstrap, prevalence threshold.
    Rfq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BrfMinority {
    Bootstrap,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecisionArg {
    Rfq,
    MajorityVote,
    ThresholdHalf,
}

impl From<DecisionArg> for Decision {
    fn from(d: DecisionArg) -> Self {
        match d {
            DecisionArg::Rfq => Decision::Rfq,
            DecisionArg::MajorityVote => Decision::MajorityVote,
            DecisionArg::ThresholdHalf => Decision::ThresholdHalf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Minority label token; the rarer label when omitted.
    #[arg(long)]
    pub minority: Option<String>,
    #[arg(long, value_enum, default_value_t = ModelKind::Rfq)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    /// Candidate features per split; defaults to max(1, p / 3).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub nodesize: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = BrfMinority::Bootstrap)]
    pub brf_minority: BrfMinority,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    pub fn minority_label(&self) -> MinorityLabel {
        match &self.minority {
            Some(t) => MinorityLabel::Token(t.clone()),
            None => MinorityLabel::Auto,
        }
    }

    pub fn load(&self) -> anyhow::Result<Dataset> {
        Ok(rfdi_core::dataset::load_csv(&self.data, &self.target, &self.minority_label())?)
    }

    /// Forest settings for `p` predictors with the given seed.
    pub fn forest_config(&self, p: usize, seed: u64, threads: Option<usize>) -> ForestConfig {
        let mut cfg = ForestConfig::new(p);
        cfg.n_trees = self.trees;
        cfg.seed = seed;
        cfg.n_threads = threads;
        cfg.tree.nodesize = self.nodesize;
        cfg.tree.max_depth = self.max_depth;
        if let Some(m) = self.mtry {
            cfg.tree.mtry = m;
        }
        cfg.brf_minority_mode = match self.brf_minority {
            BrfMinority::Bootstrap => MinorityMode::Bootstrap,
            BrfMinority::All => MinorityMode::All,
        };
        (cfg.sampling, cfg.decision) = match self.model {
            ModelKind::Rf => (Sampling::StandardBootstrap, Decision::MajorityVote),
            ModelKind::Brf => (Sampling::Brf, Decision::MajorityVote),
            ModelKind::Rfq => (Sampling::StandardBootstrap, Decision::Rfq),
        };
        cfg
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Report JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-variable, per-run plot data.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fraction held out for testing; out-of-bag evaluation when omitted.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Decision rule; defaults to the model's own rule.
    #[arg(long, value_enum)]
    pub decision: Option<DecisionArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
