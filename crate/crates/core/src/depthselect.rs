//! Minimal-depth feature selection.
//!
//! A variable's minimal depth in a tree is the depth of the shallowest node
//! splitting on it, i.e. the root of its closest first-order maximal
//! subtree. Variables that never split get `D(T)`, the tree depth.
//!
//! The selection threshold is the mean of the minimal depth a noise
//! variable would have under random split assignment. With `q = 1 - 1/p_eff`
//! and `L_d` splitting nodes above depth `d`, the null mass at depth `d` is
//! `q^{L_d} (1 - q^{l_d})`, and the mass left over after the last split
//! level sits at `D(T)`. The standard threshold uses `p_eff = p`; the
//! adjusted one shrinks it to `p* = p ψ` with
//! `ψ = ln(n/p) / (sqrt(n/p) + ln p)`.
//!
//! Every product is evaluated as `exp` of a log-sum, since splitting-node
//! counts in deep trees easily underflow direct powers.

use serde::{Deserialize, Serialize};

use crate::dataset::ImbalanceStats;
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::tree::{Tree, TreeTopology};

/// Smallest admissible margin of `p*` above 1.
pub const P_STAR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentContext {
    pub n: usize,
    pub p: usize,
    /// `sqrt(n/p) + ln p`.
    pub lambda: f64,
    /// `ln(n/p) / lambda`.
    pub psi: f64,
    /// `p * psi`.
    pub p_star: f64,
}

/// Shrinkage factor and scaled variable count for `n` rows and `p`
/// predictors. Fails outside the `n > p`, `p* > 1` regime.
pub fn adjustment_factor(n: usize, p: usize) -> Result<AdjustmentContext> {
    let out_of_range = |reason: String| Error::AdjustmentOutOfRange { n, p, reason };
    if p == 0 {
        return Err(out_of_range("no predictors".into()));
    }
    if n <= p {
        return Err(out_of_range("requires n > p".into()));
    }
    let ratio = n as f64 / p as f64;
    let lambda = ratio.sqrt() + (p as f64).ln();
    let psi = ratio.ln() / lambda;
    let p_star = p as f64 * psi;
    if p_star <= 1.0 + P_STAR_EPS {
        return Err(out_of_range(format!("p* = {p_star} is not above 1")));
    }
    Ok(AdjustmentContext {
        n,
        p,
        lambda,
        psi,
        p_star,
    })
}

/// Log-probabilities of not splitting on a given variable above depth `d`
/// (`p1`) and at depth `d` (`p2`), and the first-split probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDepthProbability {
    pub p1: f64,
    pub p2: f64,
    pub prob: f64,
}

fn log_keep(p_eff: f64) -> Result<f64> {
    if p_eff.is_nan() || p_eff <= 1.0 || p_eff.is_infinite() {
        return Err(Error::Range(format!("effective variable count must exceed 1, got {p_eff}")));
    }
    Ok((-1.0 / p_eff).ln_1p())
}

/// `cumulative` splitting nodes above depth `d`, `level` at depth `d`.
pub fn split_depth_probability(cumulative: usize, level: usize, p_eff: f64) -> Result<SplitDepthProbability> {
    let lq = log_keep(p_eff)?;
    let p1 = cumulative as f64 * lq;
    let p2 = level as f64 * lq;
    Ok(SplitDepthProbability {
        p1,
        p2,
        prob: p1.exp() * -p2.exp_m1(),
    })
}

/// Null minimal-depth distribution of a noise variable on one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthDistribution {
    pub p_eff: f64,
    /// `mass[d] = P(D_v = d)` for `d < D(T)`.
    pub mass: Vec<f64>,
    /// Probability of never splitting, placed at depth `D(T)`.
    pub residual: f64,
    pub mean: f64,
}

impl DepthDistribution {
    pub fn depth_max(&self) -> usize {
        self.mass.len()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.residual
    }
}

pub fn null_depth_distribution(topo: &TreeTopology, p_eff: f64) -> Result<DepthDistribution> {
    let lq = log_keep(p_eff)?;
    let mass: Vec<f64> = topo
        .levels
        .iter()
        .zip(&topo.cumulative)
        .map(|(&l, &c)| (c as f64 * lq).exp() * -(l as f64 * lq).exp_m1())
        .collect();
    let residual = (topo.internal_nodes() as f64 * lq).exp();
    let depth_max = topo.depth_max as f64;
    let mean = mass.iter().enumerate().map(|(d, m)| d as f64 * m).sum::<f64>() + depth_max * residual;
    Ok(DepthDistribution {
        p_eff,
        mass,
        residual,
        mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `p_eff = p`.
    Standard,
    /// `p_eff = p*`.
    Adjusted,
}

impl ThresholdMode {
    pub fn effective_p(self, stats: &ImbalanceStats) -> Result<f64> {
        match self {
            ThresholdMode::Standard => Ok(stats.p as f64),
            ThresholdMode::Adjusted => adjustment_factor(stats.n, stats.p).map(|a| a.p_star),
        }
    }
}

/// Depth of the shallowest node splitting on `v`, or `D(T)` if none does.
pub fn minimal_depth(tree: &Tree, v: usize) -> Result<usize> {
    if v >= tree.n_features() {
        return Err(Error::Index {
            index: v,
            p: tree.n_features(),
        });
    }
    Ok(tree
        .nodes()
        .iter()
        .filter(|n| n.split.is_some_and(|s| s.variable == v))
        .map(|n| n.depth)
        .min()
        .unwrap_or_else(|| tree.depth()))
}

/// Minimal depth of every variable in one pass.
pub fn minimal_depths(tree: &Tree) -> Vec<usize> {
    let mut depths = vec![tree.depth(); tree.n_features()];
    for node in tree.nodes() {
        if let Some(s) = node.split {
            depths[s.variable] = depths[s.variable].min(node.depth);
        }
    }
    depths
}

/// Per-variable minimal depth averaged over trees; cached on the forest.
pub fn forest_minimal_depth(forest: &Forest) -> &[f64] {
    forest.minimal_depths.get_or_init(|| {
        let mut sum = vec![0usize; forest.n_features()];
        for tree in forest.trees() {
            for (s, d) in sum.iter_mut().zip(minimal_depths(tree)) {
                *s += d;
            }
        }
        let n = forest.trees().len() as f64;
        sum.into_iter().map(|s| s as f64 / n).collect()
    })
}

/// Population variance across trees of each variable's minimal depth.
pub fn minimal_depth_variance(forest: &Forest) -> Vec<f64> {
    let means = forest_minimal_depth(forest);
    let mut acc = vec![0.0; forest.n_features()];
    for tree in forest.trees() {
        for ((a, d), m) in acc.iter_mut().zip(minimal_depths(tree)).zip(means) {
            *a += (d as f64 - m).powi(2);
        }
    }
    let n = forest.trees().len() as f64;
    acc.into_iter().map(|a| a / n).collect()
}

/// Sum that does not depend on the order of `values`.
fn order_free_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values.into_iter().sum::<f64>() / n
}

fn check_stats(forest: &Forest, stats: &ImbalanceStats) -> Result<()> {
    if stats.p != forest.n_features() {
        return Err(Error::MismatchedData(format!(
            "forest has {} predictors, stats report {}",
            forest.n_features(),
            stats.p
        )));
    }
    Ok(())
}

/// Forest average of per-tree null-distribution means.
pub fn forest_threshold(forest: &Forest, mode: ThresholdMode, stats: &ImbalanceStats) -> Result<f64> {
    check_stats(forest, stats)?;
    threshold_for(forest, mode.effective_p(stats)?)
}

/// [`forest_threshold`] with an explicit effective variable count.
pub fn threshold_for(forest: &Forest, p_eff: f64) -> Result<f64> {
    let means = forest
        .trees()
        .iter()
        .map(|t| null_depth_distribution(&t.topology(), p_eff).map(|d| d.mean))
        .collect::<Result<Vec<f64>>>()?;
    Ok(order_free_mean(means))
}

/// Indices of variables whose average minimal depth is at most the
/// threshold for `mode`.
pub fn selected(forest: &Forest, mode: ThresholdMode, stats: &ImbalanceStats) -> Result<Vec<usize>> {
    let threshold = forest_threshold(forest, mode, stats)?;
    Ok(select_below(forest_minimal_depth(forest), threshold))
}

fn select_below(depths: &[f64], threshold: f64) -> Vec<usize> {
    depths
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= threshold)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDepth {
    pub name: String,
    pub mean_depth: f64,
    pub depth_variance: f64,
    pub selected_standard: bool,
    pub selected_adjusted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub n_trees: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub variables: Vec<VariableDepth>,
    pub threshold_standard: f64,
    /// `None` when the adjustment is undefined for this data.
    pub threshold_adjusted: Option<f64>,
    pub adjustment: Option<AdjustmentContext>,
    /// Why the adjusted threshold is missing, if it is.
    pub adjustment_error: Option<String>,
    pub selected_standard: Vec<String>,
    pub selected_adjusted: Option<Vec<String>>,
    pub metadata: RunMetadata,
}

/// Both thresholds and selections. An undefined adjustment leaves the
/// adjusted fields empty instead of failing.
pub fn select_features(forest: &Forest, stats: &ImbalanceStats) -> Result<SelectionReport> {
    check_stats(forest, stats)?;
    let depths = forest_minimal_depth(forest);
    let variance = minimal_depth_variance(forest);
    let threshold_standard = threshold_for(forest, stats.p as f64)?;
    let (adjustment, adjustment_error) = match adjustment_factor(stats.n, stats.p) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let threshold_adjusted = adjustment.map(|a| threshold_for(forest, a.p_star)).transpose()?;

    let std_sel = select_below(depths, threshold_standard);
    let adj_sel = threshold_adjusted.map(|t| select_below(depths, t));
    let names = forest.feature_names();
    let variables = (0..forest.n_features())
        .map(|j| VariableDepth {
            name: names[j].clone(),
            mean_depth: depths[j],
            depth_variance: variance[j],
            selected_standard: std_sel.contains(&j),
            selected_adjusted: adj_sel.as_ref().map(|s| s.contains(&j)),
        })
        .collect();
    let to_names = |idx: &[usize]| idx.iter().map(|&j| names[j].clone()).collect::<Vec<_>>();
    Ok(SelectionReport {
        variables,
        threshold_standard,
        threshold_adjusted,
        adjustment,
        adjustment_error,
        selected_standard: to_names(&std_sel),
        selected_adjusted: adj_sel.as_deref().map(to_names),
        metadata: RunMetadata {
            seed: forest.config().seed,
            n_trees: forest.trees().len(),
            iterations: 1,
        },
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn topology() -> impl Strategy<Value = TreeTopology> {
        proptest::collection::vec(0usize..5000, 0..40).prop_map(TreeTopology::from_levels)
    }

    /// Direct power products, no log space.
    fn direct_mass(levels: &[usize], p_eff: f64) -> Vec<f64> {
        let q = 1.0 - 1.0 / p_eff;
        (0..levels.len())
            .map(|d| (1.0 - q.powi(levels[d] as i32)) * levels[..d].iter().map(|&l| q.powi(l as i32)).product::<f64>())
            .collect()
    }

    proptest! {
        #[test]
        fn normalized(topo in topology(), p_eff in 1.01f64..100.0) {
            let d = null_depth_distribution(&topo, p_eff).unwrap();
            prop_assert!(d.mass.iter().all(|m| (0.0..=1.0).contains(m)));
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn matches_direct_products(topo in topology(), p_eff in 1.01f64..100.0) {
            let d = null_depth_distribution(&topo, p_eff).unwrap();
            for (a, b) in d.mass.iter().zip(direct_mass(&topo.levels, p_eff)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn mean_grows_with_effective_count(topo in topology(), lo in 1.01f64..50.0, step in 0.0f64..50.0) {
            let a = null_depth_distribution(&topo, lo).unwrap().mean;
            let b = null_depth_distribution(&topo, lo + step).unwrap().mean;
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn mean_equals_tail_sum(topo in topology(), p_eff in 1.01f64..100.0) {
            // E[D] = sum_{d=1}^{D} P(D >= d) = sum_{d=1}^{D} q^{L_d}.
            let q = 1.0 - 1.0 / p_eff;
            let total: usize = topo.levels.iter().sum();
            let tail: f64 = (1..=topo.depth_max)
                .map(|d| {
                    let cum = if d < topo.depth_max { topo.cumulative[d] } else { total };
                    q.powf(cum as f64)
                })
                .sum();
            let d = null_depth_distribution(&topo, p_eff).unwrap();
            prop_assert!((d.mean - tail).abs() < 1e-9 * (1.0 + tail));
        }
    }
}
