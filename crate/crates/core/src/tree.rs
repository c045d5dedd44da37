//! CART classification trees grown with Gini impurity and per-node random
//! feature subsetting.
//!
//! Nodes are stored in a flat arena with the root at index 0. Every node
//! keeps its in-bag class counts, so leaves carry the class-count pair used
//! for probability estimates. Observations go left iff `value <= threshold`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Candidate features drawn per node.
    pub mtry: usize,
    /// Nodes with at most this many samples become leaves.
    pub nodesize: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// Keep the drawn candidate set on every split node.
    #[serde(default)]
    pub record_candidates: bool,
}

impl TreeConfig {
    /// `mtry = max(1, floor(p / 3))`, `nodesize = 1`, unlimited depth.
    pub fn for_predictors(p: usize) -> Self {
        Self {
            mtry: (p / 3).max(1),
            nodesize: 1,
            max_depth: None,
            seed: 0,
            record_candidates: false,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.mtry == 0 || self.mtry > p {
            return Err(Error::Config(format!("mtry must lie in 1..={p}, got {}", self.mtry)));
        }
        if self.nodesize == 0 {
            return Err(Error::Config("nodesize must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub variable: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub depth: usize,
    /// In-bag `[label 0, label 1]` counts reaching this node.
    pub counts: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<usize>>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Fraction of label-1 samples.
    pub fn minority_fraction(&self) -> f64 {
        let total = self.counts[0] + self.counts[1];
        if total == 0 {
            0.0
        } else {
            self.counts[1] as f64 / total as f64
        }
    }

    /// Majority label, ties going to label 1.
    pub fn majority(&self) -> u8 {
        u8::from(self.counts[1] >= self.counts[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    n_features: usize,
    nodes: Vec<Node>,
    in_bag: Vec<usize>,
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub variable: usize,
    pub threshold: f64,
    /// Gini impurity decrease, weighted by child sizes.
    pub decrease: f64,
}

/// Per-depth counts of non-terminal nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    /// Maximum node depth `D(T)`.
    pub depth_max: usize,
    /// `levels[d]`: splitting nodes at depth `d`, for `d < depth_max`.
    pub levels: Vec<usize>,
    /// `cumulative[d] = levels[0] + ... + levels[d - 1]`.
    pub cumulative: Vec<usize>,
}

impl TreeTopology {
    /// Build from per-depth splitting-node counts.
    pub fn from_levels(levels: Vec<usize>) -> Self {
        let cumulative = levels
            .iter()
            .scan(0usize, |acc, &l| {
                let before = *acc;
                *acc += l;
                Some(before)
            })
            .collect();
        Self {
            depth_max: levels.len(),
            levels,
            cumulative,
        }
    }

    pub fn internal_nodes(&self) -> usize {
        self.levels.iter().sum()
    }
}

fn gini(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - a * a - b * b
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Reusable scratch space for split search.
#[derive(Default)]
struct Splitter {
    buf: Vec<(f64, u8)>,
}

impl Splitter {
    /// Best threshold on one column, or `None` if the column is constant
    /// over `rows`.
    fn scan(&mut self, column: &[f64], labels: &[u8], rows: &[usize], parent: [usize; 2]) -> Option<(f64, f64)> {
        let first = column[rows[0]];
        if rows.iter().all(|&i| column[i] == first) {
            return None;
        }
        self.buf.clear();
        self.buf.extend(rows.iter().map(|&i| (column[i], labels[i])));
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let m = rows.len();
        let parent_gini = gini(parent[0], parent[1]);
        let mut left = [0usize; 2];
        let mut best: Option<(f64, f64)> = None;
        for k in 0..m - 1 {
            left[self.buf[k].1 as usize] += 1;
            let (v, next) = (self.buf[k].0, self.buf[k + 1].0);
            if v == next {
                continue;
            }
            let nl = k + 1;
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let weighted = (nl as f64 * gini(left[0], left[1]) + (m - nl) as f64 * gini(right[0], right[1])) / m as f64;
            let decrease = parent_gini - weighted;
            if best.is_none_or(|(d, _)| decrease > d) {
                best = Some((decrease, midpoint(v, next)));
            }
        }
        best
    }

    fn best(&mut self, data: &Dataset, rows: &[usize], candidates: &[usize], counts: [usize; 2]) -> Option<SplitRule> {
        let mut sorted = candidates.to_vec();
        sorted.sort_unstable();
        let mut best: Option<SplitRule> = None;
        for &j in &sorted {
            if let Some((decrease, threshold)) = self.scan(data.column(j), data.labels(), rows, counts) {
                if best.is_none_or(|b| decrease > b.decrease) {
                    best = Some(SplitRule {
                        variable: j,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }
}

fn class_counts(labels: &[u8], rows: &[usize]) -> [usize; 2] {
    let ones = rows.iter().filter(|&&i| labels[i] == 1).count();
    [rows.len() - ones, ones]
}

/// Best Gini split of `rows` over `candidates`.
///
/// Thresholds are midpoints between consecutive distinct values. Ties go to
/// the lower variable index, then the lower threshold. Returns `None` for
/// pure nodes and when no candidate takes two distinct values.
pub fn best_split(data: &Dataset, rows: &[usize], candidates: &[usize]) -> Option<SplitRule> {
    if rows.is_empty() {
        return None;
    }
    let counts = class_counts(data.labels(), rows);
    if counts[0] == 0 || counts[1] == 0 {
        return None;
    }
    Splitter::default().best(data, rows, candidates, counts)
}

/// Grow a tree on the (multi)set of row indices `in_bag`.
///
/// At each node `mtry` features are drawn without replacement. If none of
/// them can split the node, further features are drawn one at a time from
/// the remaining pool until one can, so impure nodes only stop on the
/// `nodesize` and `max_depth` limits.
pub fn grow_tree(data: &Dataset, in_bag: &[usize], cfg: &TreeConfig) -> Result<Tree> {
    let p = data.p();
    cfg.validate(p)?;
    if in_bag.is_empty() {
        return Err(Error::Config("in-bag sample is empty".into()));
    }
    if let Some(&bad) = in_bag.iter().find(|&&i| i >= data.n()) {
        return Err(Error::Index { index: bad, p: data.n() });
    }
    let labels = data.labels();
    let mut rng = seed::rng(cfg.seed);
    let mut features: Vec<usize> = (0..p).collect();
    let mut splitter = Splitter::default();
    let mut rows = in_bag.to_vec();

    let mut nodes = vec![Node {
        depth: 0,
        counts: class_counts(labels, &rows),
        split: None,
        candidates: None,
    }];
    let mut stack = vec![(0usize, 0usize, rows.len())];
    while let Some((id, lo, hi)) = stack.pop() {
        let Node { depth, counts, .. } = nodes[id];
        let m = hi - lo;
        if m <= cfg.nodesize || counts[0] == 0 || counts[1] == 0 || cfg.max_depth.is_some_and(|d| depth >= d) {
            continue;
        }
        let node_rows = &rows[lo..hi];
        for k in 0..cfg.mtry {
            let pick = rng.random_range(k..p);
            features.swap(k, pick);
        }
        let mut drawn = cfg.mtry;
        let mut rule = splitter.best(data, node_rows, &features[..drawn], counts);
        while rule.is_none() && drawn < p {
            let pick = rng.random_range(drawn..p);
            features.swap(drawn, pick);
            rule = splitter.best(data, node_rows, &features[drawn..=drawn], counts);
            drawn += 1;
        }
        let Some(rule) = rule else { continue };

        let column = data.column(rule.variable);
        let slice = &mut rows[lo..hi];
        let mut mid = 0;
        for k in 0..slice.len() {
            if column[slice[k]] <= rule.threshold {
                slice.swap(mid, k);
                mid += 1;
            }
        }
        let mid = lo + mid;
        let left = nodes.len();
        let right = left + 1;
        for (a, b) in [(lo, mid), (mid, hi)] {
            nodes.push(Node {
                depth: depth + 1,
                counts: class_counts(labels, &rows[a..b]),
                split: None,
                candidates: None,
            });
        }
        let node = &mut nodes[id];
        node.split = Some(Split {
            variable: rule.variable,
            threshold: rule.threshold,
            left,
            right,
        });
        if cfg.record_candidates {
            let mut drawn_set = features[..drawn].to_vec();
            drawn_set.sort_unstable();
            node.candidates = Some(drawn_set);
        }
        stack.push((right, mid, hi));
        stack.push((left, lo, mid));
    }
    Ok(Tree {
        n_features: p,
        nodes,
        in_bag: in_bag.to_vec(),
    })
}

impl Tree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Row indices this tree was grown on, with bootstrap multiplicity.
    pub fn in_bag(&self) -> &[usize] {
        &self.in_bag
    }

    /// Maximum node depth `D(T)`.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaf_for(&self, x: &[f64]) -> Result<&Node> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.leaf_unchecked(x))
    }

    pub(crate) fn leaf_unchecked(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Some(s) = node.split {
            node = if x[s.variable] <= s.threshold {
                &self.nodes[s.left]
            } else {
                &self.nodes[s.right]
            };
        }
        node
    }

    /// In-bag class counts of the leaf that `x` reaches.
    pub fn predict(&self, x: &[f64]) -> Result<[usize; 2]> {
        self.leaf_for(x).map(|n| n.counts)
    }

    pub fn topology(&self) -> TreeTopology {
        let depth_max = self.depth();
        let mut levels = vec![0usize; depth_max];
        for node in self.nodes.iter().filter(|n| !n.is_leaf()) {
            levels[node.depth] += 1;
        }
        TreeTopology::from_levels(levels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("bad tree json: {e}")))
    }
}

/// Free-function form of [`Tree::topology`].
pub fn topology(tree: &Tree) -> TreeTopology {
    tree.topology()
}

/// Free-function form of [`Tree::predict`].
pub fn predict_tree(tree: &Tree, x: &[f64]) -> Result<[usize; 2]> {
    tree.predict(x)
}
