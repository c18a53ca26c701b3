//! Random forest of Gini-split decision trees.
//!
//! Each tree is grown on a bootstrap resample drawn from its own sub-stream of
//! the forest seed. At every node `max_features` distinct features are drawn;
//! for each, candidate thresholds sit at midpoints between consecutive distinct
//! values and rows with `x <= threshold` go left.
//!
//! Split quality is compared exactly. Minimising the size-weighted child Gini
//! impurity is equivalent to maximising
//! `(l0^2 + l1^2) / n_l + (r0^2 + r1^2) / n_r`, a ratio of integers, so
//! candidates are ranked by cross-multiplication in `u128` and ties resolve
//! deterministically to the first candidate seen (feature draw order, then
//! ascending threshold).

use std::cmp::Ordering;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, check_width};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// `1 - p0^2 - p1^2`. The caller guarantees a non-empty node.
pub fn gini_impurity(counts: [u64; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    debug_assert!(total > 0.0, "gini of an empty node");
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MaxFeaturesRepr", into = "MaxFeaturesRepr")]
pub enum MaxFeatures {
    /// `floor(sqrt(width))`, at least 1.
    Sqrt,
    All,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxFeaturesRepr {
    Count(usize),
    Name(String),
}

impl TryFrom<MaxFeaturesRepr> for MaxFeatures {
    type Error = String;

    fn try_from(r: MaxFeaturesRepr) -> std::result::Result<Self, String> {
        match r {
            MaxFeaturesRepr::Count(n) => Ok(MaxFeatures::Count(n)),
            MaxFeaturesRepr::Name(s) => match s.as_str() {
                "sqrt" => Ok(MaxFeatures::Sqrt),
                "all" => Ok(MaxFeatures::All),
                other => Err(format!("max_features must be \"sqrt\", \"all\" or a count, got {other:?}")),
            },
        }
    }
}

impl From<MaxFeatures> for MaxFeaturesRepr {
    fn from(m: MaxFeatures) -> Self {
        match m {
            MaxFeatures::Sqrt => MaxFeaturesRepr::Name("sqrt".into()),
            MaxFeatures::All => MaxFeaturesRepr::Name("all".into()),
            MaxFeatures::Count(n) => MaxFeaturesRepr::Count(n),
        }
    }
}

impl MaxFeatures {
    pub fn resolve(self, width: usize) -> usize {
        let n = match self {
            MaxFeatures::Sqrt => (width as f64).sqrt().floor() as usize,
            MaxFeatures::All => width,
            MaxFeatures::Count(n) => n,
        };
        n.clamp(1, width.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_features")]
    pub max_features: MaxFeatures,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

fn default_n_trees() -> usize {
    250
}
fn default_max_features() -> MaxFeatures {
    MaxFeatures::Sqrt
}
fn default_min_samples_leaf() -> usize {
    1
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: default_n_trees(),
            seed: 0,
            max_features: default_max_features(),
            min_samples_leaf: default_min_samples_leaf(),
            max_depth: None,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("random forest n_trees must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::config("max_features count must be at least 1"));
        }
        Ok(())
    }
}

/// Growth limits for a single tree, with `max_features` already resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: [u64; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Score `(a * nr + b * nl) / (nl * nr)` kept as an exact fraction.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_children(l: [u64; 2], r: [u64; 2]) -> Purity {
        let (nl, nr) = ((l[0] + l[1]) as u128, (r[0] + r[1]) as u128);
        let a = (l[0] as u128).pow(2) + (l[1] as u128).pow(2);
        let b = (r[0] as u128).pow(2) + (r[1] as u128).pow(2);
        Purity {
            num: a * nr + b * nl,
            den: nl * nr,
        }
    }

    fn of_node(c: [u64; 2]) -> Purity {
        Purity {
            num: (c[0] as u128).pow(2) + (c[1] as u128).pow(2),
            den: (c[0] + c[1]) as u128,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: Purity,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a / 2.0 + b / 2.0;
    // adjacent floats: keep `a <= mid < b`
    if mid < b && mid >= a {
        mid
    } else {
        a
    }
}

fn counts_of(labels: impl Iterator<Item = u8>) -> [u64; 2] {
    let mut c = [0u64; 2];
    for l in labels {
        c[l as usize] += 1;
    }
    c
}

impl DecisionTree {
    /// Grows a tree on the rows listed in `samples` (repeats allowed).
    pub fn fit<R: AsRef<[f64]>>(
        x: &[R],
        y: &[u8],
        samples: Vec<usize>,
        params: &TreeParams,
        rng: &mut Rng,
    ) -> DecisionTree {
        let width = x.first().map_or(0, |r| r.as_ref().len());
        let mut features: Vec<usize> = (0..width).collect();
        let mut buf: Vec<(f64, u8)> = Vec::with_capacity(samples.len());
        let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
        let mut stack = vec![(0usize, samples, 0usize)];

        while let Some((id, rows, depth)) = stack.pop() {
            let counts = counts_of(rows.iter().map(|&i| y[i]));
            let n = rows.len();
            let stop = counts[0] == 0
                || counts[1] == 0
                || n < 2 * params.min_samples_leaf
                || params.max_depth.is_some_and(|d| depth >= d);
            let split = if stop {
                None
            } else {
                best_split(x, y, &rows, counts, params, &mut features, &mut buf, rng)
            };
            let Some(best) = split else {
                nodes[id] = Node::Leaf { counts };
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| x[i].as_ref()[best.feature] <= best.threshold);
            let left_id = nodes.len();
            nodes.push(Node::Leaf { counts: [0, 0] });
            nodes.push(Node::Leaf { counts: [0, 0] });
            nodes[id] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left_id as u32,
                right: left_id as u32 + 1,
            };
            stack.push((left_id + 1, right, depth + 1));
            stack.push((left_id, left, depth + 1));
        }
        DecisionTree { nodes }
    }

    /// Rebuilds a tree from a node array, checking that child links are valid.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<DecisionTree> {
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Split { left, right, .. } => {
                    let ok = |c: u32| (c as usize) > i && (c as usize) < nodes.len();
                    if !ok(left) || !ok(right) || left == right {
                        return Err(Error::Format(format!("node {i} has invalid children")));
                    }
                }
                Node::Leaf { counts } => {
                    if counts[0] + counts[1] == 0 {
                        return Err(Error::Format(format!("leaf {i} is empty")));
                    }
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left as usize).max(go(nodes, right as usize)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_counts(&self, row: &[f64]) -> [u64; 2] {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Majority class of the reached leaf, ties to 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let c = self.leaf_counts(row);
        u8::from(c[1] > c[0])
    }
}

#[allow(clippy::too_many_arguments)]
fn best_split<R: AsRef<[f64]>>(
    x: &[R],
    y: &[u8],
    rows: &[usize],
    counts: [u64; 2],
    params: &TreeParams,
    features: &mut [usize],
    buf: &mut Vec<(f64, u8)>,
    rng: &mut Rng,
) -> Option<Candidate> {
    let width = features.len();
    let m = params.max_features.min(width);
    if m < width {
        for i in 0..m {
            let j = rng.random_range(i as u64..width as u64) as usize;
            features.swap(i, j);
        }
    } else {
        features.sort_unstable();
    }

    let n = rows.len();
    let parent = Purity::of_node(counts);
    let msl = params.min_samples_leaf;
    let mut best: Option<Candidate> = None;

    for &f in &features[..m] {
        buf.clear();
        buf.extend(rows.iter().map(|&i| (x[i].as_ref()[f], y[i])));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u64; 2];
        for p in 1..n {
            left[buf[p - 1].1 as usize] += 1;
            if buf[p - 1].0 >= buf[p].0 || p < msl || n - p < msl {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let score = Purity::of_children(left, right);
            // positive gain only
            if score.cmp(&parent) != Ordering::Greater {
                continue;
            }
            if best.as_ref().is_none_or(|b| score.cmp(&b.score) == Ordering::Greater) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(buf[p - 1].0, buf[p].0),
                    score,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    width: usize,
}

impl ForestModel {
    pub fn from_trees(trees: Vec<DecisionTree>, width: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::config("a forest needs at least one tree"));
        }
        Ok(ForestModel { trees, width })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `[votes for 0, votes for 1]` per row; each pair sums to the tree count.
    pub fn votes<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<[usize; 2]>> {
        check_width(x, self.width)?;
        Ok(x
            .par_iter()
            .map(|row| {
                let pos = self
                    .trees
                    .iter()
                    .filter(|t| t.predict_row(row.as_ref()) == 1)
                    .count();
                [self.trees.len() - pos, pos]
            })
            .collect())
    }

    /// Majority vote, ties to 0.
    pub fn predict<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<u8>> {
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| u8::from(v[1] > v[0]))
            .collect())
    }

    pub fn predict_scores<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Result<Vec<f64>> {
        let n = self.trees.len() as f64;
        Ok(self.votes(x)?.into_iter().map(|v| v[1] as f64 / n).collect())
    }
}

pub fn forest_fit<R: AsRef<[f64]> + Sync>(x: &[R], y: &[u8], cfg: &ForestConfig) -> Result<ForestModel> {
    cfg.validate()?;
    let width = check_training(x, y)?;
    let params = TreeParams {
        max_features: cfg.max_features.resolve(width),
        min_samples_leaf: cfg.min_samples_leaf,
        max_depth: cfg.max_depth,
    };
    let n = x.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::substream(cfg.seed, &[t as u64]);
            let sample: Vec<usize> = (0..n)
                .map(|_| rng.random_range(0..n as u64) as usize)
                .collect();
            DecisionTree::fit(x, y, sample, &params, &mut rng)
        })
        .collect();
    ForestModel::from_trees(trees, width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity([5, 0]), 0.0);
        assert_eq!(gini_impurity([3, 3]), 0.5);
        assert_eq!(gini_impurity([1, 3]), 0.375);
    }

    #[test]
    fn purity_ordering_matches_gini() {
        // (2,0)|(1,3) beats (1,1)|(2,2)
        let a = Purity::of_children([2, 0], [1, 3]);
        let b = Purity::of_children([1, 1], [2, 2]);
        assert_eq!(a.cmp(&b), Ordering::Greater);
        let wg = |l: [u64; 2], r: [u64; 2]| {
            let (nl, nr) = ((l[0] + l[1]) as f64, (r[0] + r[1]) as f64);
            (nl * gini_impurity(l) + nr * gini_impurity(r)) / (nl + nr)
        };
        assert!(wg([2, 0], [1, 3]) < wg([1, 1], [2, 2]));
        // equal split scores compare equal exactly
        let c = Purity::of_children([2, 1], [1, 2]);
        let d = Purity::of_children([1, 2], [2, 1]);
        assert_eq!(c.cmp(&d), Ordering::Equal);
    }

    #[test]
    fn single_class_forest() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![1u8; 20];
        let f = forest_fit(&x, &y, &ForestConfig { n_trees: 5, ..Default::default() }).unwrap();
        assert!(f.predict(&x).unwrap().iter().all(|&l| l == 1));
        assert!(f.trees().iter().all(|t| matches!(t.root(), Node::Leaf { .. })));
    }

    #[test]
    fn midpoint_stays_between() {
        assert_eq!(midpoint(1.0, 3.0), 2.0);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
        assert_eq!(midpoint(-f64::MAX, f64::MAX), 0.0);
    }

    #[test]
    fn max_depth_and_min_leaf_limit_growth() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        let params = TreeParams {
            max_features: 1,
            min_samples_leaf: 1,
            max_depth: Some(3),
        };
        let t = DecisionTree::fit(&x, &y, (0..64).collect(), &params, &mut seed::rng_from_seed(0));
        assert!(t.depth() <= 3);
        let params = TreeParams {
            max_features: 1,
            min_samples_leaf: 10,
            max_depth: None,
        };
        let t = DecisionTree::fit(&x, &y, (0..64).collect(), &params, &mut seed::rng_from_seed(0));
        for node in t.nodes() {
            if let Node::Leaf { counts } = node {
                assert!(counts[0] + counts[1] >= 10);
            }
        }
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(3197), 56);
        assert_eq!(MaxFeatures::Sqrt.resolve(2), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Count(100).resolve(7), 7);
    }

    #[test]
    fn node_array_validation() {
        assert!(DecisionTree::from_nodes(vec![]).is_err());
        let bad = vec![Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 1,
            right: 2,
        }];
        assert!(DecisionTree::from_nodes(bad).is_err());
        assert!(DecisionTree::from_nodes(vec![Node::Leaf { counts: [0, 0] }]).is_err());
    }
}
