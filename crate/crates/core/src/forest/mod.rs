//! Tree ensembles under standard or balanced bootstrapping.
//!
//! Each tree `i` draws its sample and grows from seeds derived from
//! `(cfg.seed, i)`, so a forest is a pure function of its data and config
//! whatever the thread count.

mod bootstrap;
mod metrics;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{grow_tree, Tree, TreeConfig};

pub use bootstrap::{balanced_bootstrap, standard_bootstrap, MinorityMode};
pub use metrics::{metrics, ConfusionMatrix, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `n` draws with replacement.
    #[default]
    StandardBootstrap,
    /// Balanced random forest: `N_min` rows of each class.
    Brf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Label 1 iff the probability reaches the training prevalence.
    #[default]
    Rfq,
    /// Label 1 iff at least half of the trees vote for it.
    MajorityVote,
    /// Label 1 iff the probability reaches 0.5.
    ThresholdHalf,
}

impl Decision {
    /// `proba` is the averaged leaf fraction and `votes` the fraction of
    /// trees whose leaf majority is label 1.
    pub fn apply(self, proba: f64, votes: f64, prevalence: f64) -> u8 {
        match self {
            Decision::Rfq => u8::from(proba >= prevalence),
            Decision::MajorityVote => u8::from(votes >= 0.5),
            Decision::ThresholdHalf => u8::from(proba >= 0.5),
        }
    }
}

/// `1` iff `p_hat >= pi`.
pub fn rfq_classify(p_hat: f64, pi: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::Range(format!("probability {p_hat} outside [0, 1]")));
    }
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::Range(format!("prevalence {pi} outside (0, 1]")));
    }
    Ok(u8::from(p_hat >= pi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub sampling: Sampling,
    pub brf_minority_mode: MinorityMode,
    pub decision: Decision,
    pub tree: TreeConfig,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool. Never affects
    /// results.
    #[serde(skip)]
    pub n_threads: Option<usize>,
}

impl ForestConfig {
    /// Desk-scale defaults: 200 trees, `mtry = max(1, p / 3)`, nodesize 1.
    pub fn new(p: usize) -> Self {
        Self {
            n_trees: 200,
            sampling: Sampling::StandardBootstrap,
            brf_minority_mode: MinorityMode::Bootstrap,
            decision: Decision::Rfq,
            tree: TreeConfig::for_predictors(p),
            seed: 0,
            n_threads: None,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if self.n_threads == Some(0) {
            return Err(Error::Config("n_threads must be >= 1".into()));
        }
        self.tree.validate(p)
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    config: ForestConfig,
    feature_names: Vec<String>,
    n_train: usize,
    prevalence: f64,
    n_min: usize,
    pub(crate) minimal_depths: OnceLock<Vec<f64>>,
}

fn grow_one(data: &Dataset, cfg: &ForestConfig, index: usize) -> Result<Tree> {
    let tree_seed = seed::derive(cfg.seed, index as u64);
    let mut rng = seed::rng(seed::derive(tree_seed, 1));
    let in_bag = match cfg.sampling {
        Sampling::StandardBootstrap => standard_bootstrap(data.n(), &mut rng),
        Sampling::Brf => bootstrap::balanced_bootstrap_with(data.labels(), cfg.brf_minority_mode, &mut rng)?,
    };
    let tree_cfg = TreeConfig {
        seed: seed::derive(tree_seed, 2),
        ..cfg.tree.clone()
    };
    grow_tree(data, &in_bag, &tree_cfg)
}

/// Grow `cfg.n_trees` trees on `data`.
pub fn train_forest(data: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    cfg.validate(data.p())?;
    let stats = data.stats();
    if stats.c0 == 0 || stats.c1 == 0 {
        return Err(Error::DegenerateLabels("training data needs both classes".into()));
    }
    let grow_all = || {
        (0..cfg.n_trees)
            .into_par_iter()
            .map(|i| grow_one(data, cfg, i))
            .collect::<Result<Vec<Tree>>>()
    };
    let trees = match cfg.n_threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(grow_all)?,
        None => grow_all()?,
    };
    Ok(Forest {
        trees,
        config: cfg.clone(),
        feature_names: data.feature_names(),
        n_train: data.n(),
        prevalence: stats.prevalence,
        n_min: stats.n_min(),
        minimal_depths: OnceLock::new(),
    })
}

/// Out-of-bag accumulation for one row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OobEstimate {
    /// Averaged leaf minority fraction.
    pub proba: f64,
    /// Fraction of OOB trees voting for label 1.
    pub votes: f64,
    pub n_trees: usize,
}

/// Serializable forest overview with OOB performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSummary {
    pub config: ForestConfig,
    pub prevalence: f64,
    pub n_min: usize,
    pub n_trees: usize,
    /// Share of rows with at least one OOB tree.
    pub oob_coverage: f64,
    pub oob_confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Training minority prevalence `pi`.
    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    /// Assemble a forest from already grown trees.
    pub fn from_trees(trees: Vec<Tree>, config: ForestConfig, data: &Dataset) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if let Some(t) = trees.iter().find(|t| t.n_features() != data.p()) {
            return Err(Error::Dimension {
                expected: data.p(),
                got: t.n_features(),
            });
        }
        Ok(Self {
            config: ForestConfig {
                n_trees: trees.len(),
                ..config
            },
            trees,
            feature_names: data.feature_names(),
            n_train: data.n(),
            prevalence: data.stats().prevalence,
            n_min: data.stats().n_min(),
            minimal_depths: OnceLock::new(),
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean over trees of the reached leaf's minority fraction.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sum: f64 = self.trees.iter().map(|t| t.leaf_unchecked(x).minority_fraction()).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Fraction of trees whose leaf majority is label 1.
    pub fn vote_fraction(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let votes = self.trees.iter().filter(|t| t.leaf_unchecked(x).majority() == 1).count();
        Ok(votes as f64 / self.trees.len() as f64)
    }

    pub fn predict_proba_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.rows().map(|x| self.predict_proba(x)).collect()
    }

    /// Label under `decision`, using the training prevalence for RFQ.
    pub fn classify(&self, x: &[f64], decision: Decision) -> Result<u8> {
        let proba = self.predict_proba(x)?;
        let votes = match decision {
            Decision::MajorityVote => self.vote_fraction(x)?,
            _ => 0.0,
        };
        Ok(decision.apply(proba, votes, self.prevalence))
    }

    pub fn classify_all(&self, data: &Dataset, decision: Decision) -> Result<Vec<u8>> {
        data.rows().map(|x| self.classify(x, decision)).collect()
    }

    /// Per-row OOB accumulation; `None` where every tree saw the row.
    pub fn oob_estimates(&self, data: &Dataset) -> Result<Vec<Option<OobEstimate>>> {
        if data.n() != self.n_train || data.p() != self.n_features() {
            return Err(Error::MismatchedData(format!(
                "forest trained on {} x {}, got {} x {}",
                self.n_train,
                self.n_features(),
                data.n(),
                data.p()
            )));
        }
        let n = data.n();
        let mut proba = vec![0.0; n];
        let mut votes = vec![0usize; n];
        let mut count = vec![0usize; n];
        let mut in_bag = vec![false; n];
        for tree in &self.trees {
            in_bag.iter_mut().for_each(|b| *b = false);
            for &i in tree.in_bag() {
                in_bag[i] = true;
            }
            for i in (0..n).filter(|&i| !in_bag[i]) {
                let leaf = tree.leaf_unchecked(data.row(i));
                proba[i] += leaf.minority_fraction();
                votes[i] += usize::from(leaf.majority());
                count[i] += 1;
            }
        }
        Ok((0..n)
            .map(|i| {
                (count[i] > 0).then(|| OobEstimate {
                    proba: proba[i] / count[i] as f64,
                    votes: votes[i] as f64 / count[i] as f64,
                    n_trees: count[i],
                })
            })
            .collect())
    }

    /// OOB probability per training row.
    pub fn oob_proba(&self, data: &Dataset) -> Result<Vec<Option<f64>>> {
        Ok(self.oob_estimates(data)?.into_iter().map(|e| e.map(|e| e.proba)).collect())
    }

    /// Confusion matrix over rows that have OOB estimates.
    pub fn oob_confusion(&self, data: &Dataset, decision: Decision) -> Result<ConfusionMatrix> {
        let mut cm = ConfusionMatrix::default();
        for (est, &truth) in self.oob_estimates(data)?.iter().zip(data.labels()) {
            if let Some(e) = est {
                cm.record(truth, decision.apply(e.proba, e.votes, self.prevalence));
            }
        }
        Ok(cm)
    }

    pub fn summary(&self, data: &Dataset) -> Result<ForestSummary> {
        let estimates = self.oob_estimates(data)?;
        let covered = estimates.iter().filter(|e| e.is_some()).count();
        let cm = self.oob_confusion(data, self.config.decision)?;
        Ok(ForestSummary {
            config: self.config.clone(),
            prevalence: self.prevalence,
            n_min: self.n_min,
            n_trees: self.trees.len(),
            oob_coverage: covered as f64 / data.n() as f64,
            oob_confusion: cm,
            metrics: cm.metrics(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;
    use crate::synthgen::{simulate_two_class, SimConfig};
    use rand::Rng;

    fn small_data(n: usize, seed_: u64) -> Dataset {
        let mut rng = seed::rng(seed_);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.95)).collect();
        Dataset::from_rows(&rows, y, FeatureSchema::numeric(["a", "b", "c", "d"], "y", "n", "p")).unwrap()
    }

    #[test]
    fn rfq_rule() {
        assert_eq!(rfq_classify(0.30, 0.25).unwrap(), 1);
        assert_eq!(rfq_classify(0.25, 0.25).unwrap(), 1);
        assert_eq!(rfq_classify(0.20, 0.25).unwrap(), 0);
        assert!(matches!(rfq_classify(1.2, 0.25), Err(Error::Range(_))));
        assert!(matches!(rfq_classify(0.5, 0.0), Err(Error::Range(_))));
    }

    #[test]
    fn brf_in_bag_sizes() {
        let cfg = SimConfig { n_raw: 600, ..SimConfig::with_seed(4) };
        let d = simulate_two_class(&cfg).unwrap();
        let fcfg = ForestConfig { n_trees: 50, sampling: Sampling::Brf, ..ForestConfig::new(d.p()) };
        let forest = train_forest(&d, &fcfg).unwrap();
        assert_eq!(forest.trees().len(), 50);
        let n_min = d.stats().c1;
        assert_eq!(forest.n_min(), n_min);
        assert!(forest.trees().iter().all(|t| t.in_bag().len() == 2 * n_min));
    }

    #[test]
    fn brf_all_mode_includes_every_minority_row() {
        let d = small_data(300, 1);
        let fcfg = ForestConfig {
            n_trees: 10,
            sampling: Sampling::Brf,
            brf_minority_mode: MinorityMode::All,
            ..ForestConfig::new(4)
        };
        let forest = train_forest(&d, &fcfg).unwrap();
        let minority: Vec<usize> = (0..d.n()).filter(|&i| d.labels()[i] == 1).collect();
        for t in forest.trees() {
            assert!(minority.iter().all(|i| t.in_bag().contains(i)));
        }
    }

    #[test]
    fn single_tree_forest_matches_leaf_majority() {
        let d = small_data(200, 2);
        let fcfg = ForestConfig { n_trees: 1, decision: Decision::MajorityVote, ..ForestConfig::new(4) };
        let forest = train_forest(&d, &fcfg).unwrap();
        let tree = &forest.trees()[0];
        for x in d.rows() {
            assert_eq!(forest.classify(x, Decision::MajorityVote).unwrap(), tree.leaf_for(x).unwrap().majority());
            assert_eq!(forest.predict_proba(x).unwrap(), tree.leaf_for(x).unwrap().minority_fraction());
        }
    }

    #[test]
    fn thread_count_does_not_change_the_forest() {
        let d = small_data(250, 3);
        let base = ForestConfig { n_trees: 16, seed: 5, ..ForestConfig::new(4) };
        let one = train_forest(&d, &ForestConfig { n_threads: Some(1), ..base.clone() }).unwrap();
        let many = train_forest(&d, &ForestConfig { n_threads: Some(4), ..base }).unwrap();
        assert_eq!(one.trees(), many.trees());
    }

    #[test]
    fn proba_is_mean_of_tree_fractions() {
        let d = small_data(120, 6);
        let forest = train_forest(&d, &ForestConfig { n_trees: 7, ..ForestConfig::new(4) }).unwrap();
        let dumps: Vec<Tree> = forest.trees().iter().map(|t| Tree::from_json(&t.to_json()).unwrap()).collect();
        for x in d.rows().take(30) {
            let brute: f64 = dumps.iter().map(|t| t.leaf_for(x).unwrap().minority_fraction()).sum::<f64>() / 7.0;
            let p = forest.predict_proba(x).unwrap();
            assert!((p - brute).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(matches!(forest.predict_proba(&[0.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn two_tree_proba_average() {
        // Two stumps with leaf fractions 0.2 and 0.6 at x = 0.
        let d = Dataset::from_rows(
            &(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>(),
            vec![1, 0, 0, 0, 0, 1, 1, 1, 0, 0],
            FeatureSchema::numeric(["x"], "y", "n", "p"),
        )
        .unwrap();
        let cfg = TreeConfig { max_depth: Some(0), ..TreeConfig::for_predictors(1) };
        let a = grow_tree(&d, &[0, 1, 2, 3, 4], &cfg).unwrap();
        let b = grow_tree(&d, &[0, 1, 5, 6, 8], &cfg).unwrap();
        let forest = Forest::from_trees(vec![a, b], ForestConfig::new(1), &d).unwrap();
        assert!((forest.predict_proba(&[0.0]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn oob_examples() {
        let d = Dataset::from_rows(
            &(0..6).map(|i| vec![i as f64]).collect::<Vec<_>>(),
            vec![0, 0, 0, 1, 1, 0],
            FeatureSchema::numeric(["x"], "y", "n", "p"),
        )
        .unwrap();
        let cfg = TreeConfig::for_predictors(1);
        let t1 = grow_tree(&d, &[0, 1, 2, 3, 4, 5], &cfg).unwrap();
        let t2 = grow_tree(&d, &[0, 1, 2, 3, 4], &TreeConfig { max_depth: Some(0), ..cfg }).unwrap();
        let forest = Forest::from_trees(vec![t1, t2], ForestConfig::new(1), &d).unwrap();
        let oob = forest.oob_proba(&d).unwrap();
        assert_eq!(oob[0], None);
        assert!((oob[5].unwrap() - 0.4).abs() < 1e-15);
        let other = small_data(10, 0);
        assert!(matches!(forest.oob_proba(&other), Err(Error::MismatchedData(_))));
    }

    #[test]
    fn oob_coverage_under_standard_bootstrap() {
        let d = small_data(500, 9);
        let forest = train_forest(&d, &ForestConfig { n_trees: 100, ..ForestConfig::new(4) }).unwrap();
        let covered = forest.oob_proba(&d).unwrap().iter().filter(|p| p.is_some()).count();
        assert!(covered as f64 / 500.0 >= 0.99);
        let s = forest.summary(&d).unwrap();
        assert_eq!(s.oob_confusion.total(), covered);
    }

    #[test]
    fn rfq_tpr_dominates_half_threshold() {
        let d = small_data(400, 12);
        let forest = train_forest(&d, &ForestConfig { n_trees: 30, ..ForestConfig::new(4) }).unwrap();
        let rfq = forest.oob_confusion(&d, Decision::Rfq).unwrap();
        let half = forest.oob_confusion(&d, Decision::ThresholdHalf).unwrap();
        assert!(forest.prevalence() < 0.5);
        assert!(rfq.metrics().tpr.unwrap() >= half.metrics().tpr.unwrap());
    }

    #[test]
    fn config_errors() {
        let d = small_data(50, 0);
        let bad = ForestConfig { n_trees: 0, ..ForestConfig::new(4) };
        assert!(matches!(train_forest(&d, &bad), Err(Error::Config(_))));
    }
}
