//! CART-style classification tree with gini or entropy impurity.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::Result;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub fn impurity(self, counts: &[usize]) -> f64 {
        match self {
            Criterion::Gini => gini(counts),
            Criterion::Entropy => entropy(counts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    /// One uniform random threshold per candidate feature.
    Random,
    /// Every midpoint between consecutive distinct values.
    Best,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_depth: Option<usize>,
    /// Non-constant features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
}

impl TreeParams {
    /// Single-tree setting: gini, random splitter, depth 8, 8 features,
    /// leaves of at least 7 samples.
    pub fn tuned() -> Self {
        Self {
            criterion: Criterion::Gini,
            splitter: Splitter::Random,
            max_depth: Some(8),
            max_features: Some(8),
            min_samples_leaf: 7,
        }
    }
}

impl Default for TreeParams {
    /// Fully grown exhaustive-split tree.
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_depth: None,
            max_features: None,
            min_samples_leaf: 1,
        }
    }
}

/// `1 - sum p_k^2`.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// `-sum p_k log2 p_k`.
pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Class frequencies of the training rows that reached the leaf.
        distribution: Vec<f64>,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub class_count: usize,
}

impl DecisionTree {
    pub fn leaf_distribution(&self, x: ArrayView1<'_, f64>) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), self.class_count));
        for (i, x) in rows.axis_iter(Axis(0)).enumerate() {
            for (k, &p) in self.leaf_distribution(x).iter().enumerate() {
                out[[i, k]] = p;
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

pub fn train_tree(data: &TrainSet<'_>, params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    Ok(grow(data, &rows, params, &mut seed::rng(seed)))
}

/// Grows a tree on a (possibly repeated) subset of rows.
pub(crate) fn grow(data: &TrainSet<'_>, rows: &[usize], params: &TreeParams, rng: &mut Rng) -> DecisionTree {
    let mut builder = Builder {
        data: *data,
        params,
        rng,
        nodes: Vec::new(),
    };
    builder.build(rows.to_vec(), 0);
    DecisionTree {
        nodes: builder.nodes,
        class_count: data.class_count,
    }
}

struct Builder<'a, 'r> {
    data: TrainSet<'a>,
    params: &'r TreeParams,
    rng: &'r mut Rng,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_, '_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.class_count];
        for &r in rows {
            c[self.data.y[r]] += 1;
        }
        c
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let counts = self.counts(&rows);
        let n = rows.len();
        let leaf = Node::Leaf {
            distribution: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        };
        self.nodes.push(leaf);

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || n < 2 * self.params.min_samples_leaf.max(1) {
            return at;
        }
        let Some(best) = self.best_split(&rows) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.x[[r, best.feature]] <= best.threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        at
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        let d = self.data.n_features();
        let wanted = self.params.max_features.unwrap_or(d).clamp(1, d);
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(self.rng);

        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for feature in order {
            if visited == wanted {
                break;
            }
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = self.data.x[[r, feature]];
                (lo.min(v), hi.max(v))
            });
            if lo >= hi {
                continue;
            }
            visited += 1;
            let found = match self.params.splitter {
                Splitter::Random => {
                    let t = self.rng.gen_range(lo..hi);
                    self.evaluate_threshold(rows, feature, t)
                }
                Splitter::Best => self.exhaustive(rows, feature),
            };
            if let Some(c) = found {
                if best.as_ref().map_or(true, |b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn weighted_impurity(&self, left: &[usize], right: &[usize]) -> f64 {
        let (nl, nr) = (left.iter().sum::<usize>() as f64, right.iter().sum::<usize>() as f64);
        (nl * self.params.criterion.impurity(left) + nr * self.params.criterion.impurity(right)) / (nl + nr)
    }

    fn evaluate_threshold(&self, rows: &[usize], feature: usize, threshold: f64) -> Option<Candidate> {
        let k = self.data.class_count;
        let (mut left, mut right) = (vec![0; k], vec![0; k]);
        for &r in rows {
            if self.data.x[[r, feature]] <= threshold {
                left[self.data.y[r]] += 1;
            } else {
                right[self.data.y[r]] += 1;
            }
        }
        let min_leaf = self.params.min_samples_leaf;
        if left.iter().sum::<usize>() < min_leaf || right.iter().sum::<usize>() < min_leaf {
            return None;
        }
        Some(Candidate {
            feature,
            threshold,
            impurity: self.weighted_impurity(&left, &right),
        })
    }

    fn exhaustive(&self, rows: &[usize], feature: usize) -> Option<Candidate> {
        let k = self.data.class_count;
        let mut sorted: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| (self.data.x[[r, feature]], self.data.y[r]))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut left = vec![0; k];
        let mut right = vec![0; k];
        for &(_, y) in &sorted {
            right[y] += 1;
        }
        let mut best: Option<Candidate> = None;
        for p in 1..n {
            let y = sorted[p - 1].1;
            left[y] += 1;
            right[y] -= 1;
            let (prev, next) = (sorted[p - 1].0, sorted[p].0);
            if prev == next || p < min_leaf || n - p < min_leaf {
                continue;
            }
            let impurity = self.weighted_impurity(&left, &right);
            if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                let mid = prev + (next - prev) / 2.0;
                best = Some(Candidate {
                    feature,
                    threshold: if mid < next { mid } else { prev },
                    impurity,
                });
            }
        }
        best
    }
}
