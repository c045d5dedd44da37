//! `rfdi select`: repeated forests, both thresholds, consensus selection.

use anyhow::Context;
use rfdi_core::dataset::Dataset;
use rfdi_core::depthselect::{select_features, AdjustmentContext};
use rfdi_core::forest::{train_forest, ConfusionMatrix};
use rfdi_core::seed;
use serde::Serialize;

use crate::args::{ModelArgs, SelectArgs};
use crate::report::{now, ConfigEcho, DatasetStats, MetricsBlock, Spread};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub standard: Spread,
    pub adjusted: Option<Spread>,
    pub adjustment: Option<AdjustmentContext>,
    pub adjustment_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub name: String,
    /// Minimal depth averaged over trees, then over runs.
    pub mean_depth: f64,
    /// Spread of the per-run averages.
    pub depth_sd: f64,
    /// Mean over runs of the per-tree depth variance.
    pub tree_depth_variance: f64,
    pub frequency_standard: f64,
    pub frequency_adjusted: Option<f64>,
    pub selected_standard: bool,
    pub selected_adjusted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selected {
    pub standard: Vec<String>,
    pub adjusted: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub threshold_standard: f64,
    pub threshold_adjusted: Option<f64>,
    pub n_selected_standard: usize,
    pub n_selected_adjusted: Option<usize>,
    pub selected_standard: Vec<String>,
    pub selected_adjusted: Option<Vec<String>>,
    pub oob: MetricsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectReport {
    pub config: ConfigEcho,
    pub dataset_stats: DatasetStats,
    pub thresholds: Thresholds,
    pub variables: Vec<VariableSummary>,
    pub selected: Selected,
    /// Out-of-bag confusion pooled over runs.
    pub metrics: MetricsBlock,
    pub runs: Vec<RunRecord>,
}

/// One row of plot data: a variable in a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub run: usize,
    pub variable: String,
    pub mean_depth: f64,
    pub threshold_standard: f64,
    pub threshold_adjusted: Option<f64>,
    pub selected_standard: bool,
    pub selected_adjusted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOutput {
    pub report: SelectReport,
    pub plot: Vec<PlotRow>,
}

/// Run `runs` independent forests on `data`. The report carries no
/// timestamp.
pub fn select(data: &Dataset, args: &ModelArgs, runs: usize, threads: Option<usize>) -> anyhow::Result<SelectOutput> {
    anyhow::ensure!(runs >= 1, "--runs must be at least 1");
    let stats = data.stats();
    let p = data.p();
    let names = data.feature_names();

    let mut records = Vec::with_capacity(runs);
    let mut plot = Vec::with_capacity(runs * p);
    let mut depth_runs: Vec<Vec<f64>> = vec![Vec::with_capacity(runs); p];
    let mut variance_sum = vec![0.0; p];
    let mut count_std = vec![0usize; p];
    let mut count_adj = vec![0usize; p];
    let mut pooled = ConfusionMatrix::default();
    let mut adjustment = None;
    let mut adjustment_error = None;
    let mut echo = None;

    for run in 0..runs {
        let run_seed = seed::derive(args.seed, run as u64);
        let cfg = args.forest_config(p, run_seed, threads);
        let forest = train_forest(data, &cfg).with_context(|| format!("training run {run}"))?;
        let sel = select_features(&forest, stats)?;
        let cm = forest.oob_confusion(data, cfg.decision)?;
        pooled.tp += cm.tp;
        pooled.fp += cm.fp;
        pooled.tn += cm.tn;
        pooled.fn_ += cm.fn_;

        for (j, v) in sel.variables.iter().enumerate() {
            depth_runs[j].push(v.mean_depth);
            variance_sum[j] += v.depth_variance;
            count_std[j] += usize::from(v.selected_standard);
            count_adj[j] += usize::from(v.selected_adjusted == Some(true));
            plot.push(PlotRow {
                run,
                variable: v.name.clone(),
                mean_depth: v.mean_depth,
                threshold_standard: sel.threshold_standard,
                threshold_adjusted: sel.threshold_adjusted,
                selected_standard: v.selected_standard,
                selected_adjusted: v.selected_adjusted,
            });
        }
        adjustment = sel.adjustment;
        adjustment_error = sel.adjustment_error.clone();
        echo.get_or_insert_with(|| {
            let mut e = ConfigEcho::new(args, &cfg, &data.schema().minority_label);
            e.runs = Some(runs);
            e
        });
        records.push(RunRecord {
            run,
            seed: run_seed,
            threshold_standard: sel.threshold_standard,
            threshold_adjusted: sel.threshold_adjusted,
            n_selected_standard: sel.selected_standard.len(),
            n_selected_adjusted: sel.selected_adjusted.as_ref().map(Vec::len),
            selected_standard: sel.selected_standard,
            selected_adjusted: sel.selected_adjusted,
            oob: MetricsBlock::new(cfg.decision, cm),
        });
    }

    let has_adjusted = adjustment.is_some();
    let majority = |count: usize| 2 * count >= runs;
    let variables: Vec<VariableSummary> = (0..p)
        .map(|j| {
            let spread = Spread::of(&depth_runs[j]);
            VariableSummary {
                name: names[j].clone(),
                mean_depth: spread.mean,
                depth_sd: spread.sd,
                tree_depth_variance: variance_sum[j] / runs as f64,
                frequency_standard: count_std[j] as f64 / runs as f64,
                frequency_adjusted: has_adjusted.then(|| count_adj[j] as f64 / runs as f64),
                selected_standard: majority(count_std[j]),
                selected_adjusted: has_adjusted.then(|| majority(count_adj[j])),
            }
        })
        .collect();
    let pick = |f: &dyn Fn(&VariableSummary) -> bool| variables.iter().filter(|v| f(v)).map(|v| v.name.clone()).collect();
    let selected = Selected {
        standard: pick(&|v| v.selected_standard),
        adjusted: has_adjusted.then(|| pick(&|v| v.selected_adjusted == Some(true))),
    };
    let std_values: Vec<f64> = records.iter().map(|r| r.threshold_standard).collect();
    let adj_values: Option<Vec<f64>> = records.iter().map(|r| r.threshold_adjusted).collect();
    let decision = records[0].oob.decision;

    Ok(SelectOutput {
        report: SelectReport {
            config: echo.expect("at least one run"),
            dataset_stats: DatasetStats::new(stats),
            thresholds: Thresholds {
                standard: Spread::of(&std_values),
                adjusted: adj_values.as_deref().map(Spread::of),
                adjustment,
                adjustment_error,
            },
            variables,
            selected,
            metrics: MetricsBlock::new(decision, pooled),
            runs: records,
        },
        plot,
    })
}

pub fn write_plot_csv(path: &std::path::Path, rows: &[PlotRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &SelectArgs, threads: Option<usize>) -> anyhow::Result<()> {
    let data = args.model.load()?;
    let stats = DatasetStats::new(data.stats());
    stats.warn_if_outside();
    let mut out = select(&data, &args.model, args.runs, threads)?;
    if let Some(err) = &out.report.thresholds.adjustment_error {
        eprintln!("warning: adjusted threshold unavailable, reporting standard only: {err}");
    }
    out.report.config.timestamp = Some(now());
    let json = serde_json::to_string_pretty(&out.report)?;
    crate::emit(args.out.as_deref(), &json)?;
    if let Some(path) = &args.csv {
        write_plot_csv(path, &out.plot)?;
    }
    let t = &out.report.thresholds;
    eprintln!(
        "threshold standard = {:.4} ({} selected), adjusted = {} ({} selected)",
        t.standard.mean,
        out.report.selected.standard.len(),
        t.adjusted.map_or("n/a".to_owned(), |s| format!("{:.4}", s.mean)),
        out.report.selected.adjusted.as_ref().map_or("n/a".to_owned(), |s| s.len().to_string()),
    );
    Ok(())
}
