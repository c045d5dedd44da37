//! `rfdi evaluate`: confusion counts and metrics, out-of-bag or on a holdout.

use anyhow::Context;
use rfdi_core::dataset::Dataset;
use rfdi_core::forest::{train_forest, ConfusionMatrix, Decision};
use rfdi_core::seed;
use serde::Serialize;

use crate::args::{EvaluateArgs, ModelArgs};
use crate::report::{now, ConfigEcho, DatasetStats, MetricsBlock};

/// Stream for the holdout split, kept apart from the forest seeds.
const SPLIT_STREAM: u64 = 0x5B11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    OutOfBag,
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleComparison {
    pub rfq: MetricsBlock,
    pub majority_vote: MetricsBlock,
    pub threshold_half: MetricsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateReport {
    pub config: ConfigEcho,
    pub dataset_stats: DatasetStats,
    pub evaluation: Evaluation,
    pub n_train: usize,
    pub n_eval: usize,
    /// Prevalence of the training rows, used by the rfq rule.
    pub prevalence: f64,
    pub metrics: MetricsBlock,
    /// Every rule applied to the same probabilities.
    pub rules: RuleComparison,
}

struct Scored {
    truth: u8,
    proba: f64,
    votes: f64,
}

fn confusion(rows: &[Scored], decision: Decision, prevalence: f64) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for r in rows {
        cm.record(r.truth, decision.apply(r.proba, r.votes, prevalence));
    }
    cm
}

/// Train and score. `holdout` is the test fraction; out-of-bag when `None`.
pub fn evaluate(
    data: &Dataset,
    args: &ModelArgs,
    holdout: Option<f64>,
    decision: Option<Decision>,
    threads: Option<usize>,
) -> anyhow::Result<EvaluateReport> {
    let mut cfg = args.forest_config(data.p(), args.seed, threads);
    if let Some(d) = decision {
        cfg.decision = d;
    }
    let (train, test) = match holdout {
        Some(f) => {
            anyhow::ensure!(f > 0.0 && f < 1.0, "--holdout must be in (0, 1), got {f}");
            let (tr, te) = data
                .stratified_split(1.0 - f, seed::derive(args.seed, SPLIT_STREAM))
                .context("splitting for holdout")?;
            (tr, Some(te))
        }
        None => (data.clone(), None),
    };
    let forest = train_forest(&train, &cfg)?;

    let scored: Vec<Scored> = match &test {
        Some(te) => te
            .rows()
            .zip(te.labels())
            .map(|(x, &truth)| {
                Ok(Scored {
                    truth,
                    proba: forest.predict_proba(x)?,
                    votes: forest.vote_fraction(x)?,
                })
            })
            .collect::<rfdi_core::Result<_>>()?,
        None => forest
            .oob_estimates(&train)?
            .into_iter()
            .zip(train.labels())
            .filter_map(|(e, &truth)| {
                e.map(|e| Scored {
                    truth,
                    proba: e.proba,
                    votes: e.votes,
                })
            })
            .collect(),
    };

    let pi = forest.prevalence();
    let block = |d: Decision| MetricsBlock::new(d, confusion(&scored, d, pi));
    let mut config = ConfigEcho::new(args, &cfg, &data.schema().minority_label);
    config.holdout = holdout;
    Ok(EvaluateReport {
        config,
        dataset_stats: DatasetStats::new(data.stats()),
        evaluation: if holdout.is_some() { Evaluation::Holdout } else { Evaluation::OutOfBag },
        n_train: train.n(),
        n_eval: scored.len(),
        prevalence: pi,
        metrics: block(cfg.decision),
        rules: RuleComparison {
            rfq: block(Decision::Rfq),
            majority_vote: block(Decision::MajorityVote),
            threshold_half: block(Decision::ThresholdHalf),
        },
    })
}

pub fn run(args: &EvaluateArgs, threads: Option<usize>) -> anyhow::Result<()> {
    let data = args.model.load()?;
    DatasetStats::new(data.stats()).warn_if_outside();
    let mut report = evaluate(&data, &args.model, args.holdout, args.decision.map(Into::into), threads)?;
    report.config.timestamp = Some(now());
    crate::emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    let m = &report.metrics.metrics;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
    eprintln!("tpr = {}, tnr = {}, gmean = {}", fmt(m.tpr), fmt(m.tnr), fmt(m.gmean));
    Ok(())
}
