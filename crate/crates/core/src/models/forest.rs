//! Bagged trees with per-split feature subsampling and soft voting.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, DecisionTree, TreeParams};
use super::TrainSet;
use crate::error::Result;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub bootstrap: bool,
    /// Growth settings for each tree. `max_features: None` here means
    /// `round(sqrt(n_features))`.
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            bootstrap: true,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub class_count: usize,
}

impl RandomForest {
    /// Mean of the trees' leaf class-frequency vectors.
    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), self.class_count));
        for (i, x) in rows.axis_iter(Axis(0)).enumerate() {
            for t in &self.trees {
                for (k, &p) in t.leaf_distribution(x).iter().enumerate() {
                    out[[i, k]] += p;
                }
            }
        }
        out /= self.trees.len() as f64;
        out
    }
}

pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().round() as usize).max(1)
}

/// Tree `i` is grown with seed `seed + i`; its bootstrap sample is drawn
/// from an independent stream derived from that seed.
pub fn train_forest(data: &TrainSet<'_>, params: &ForestParams, seed: u64) -> Result<RandomForest> {
    let mut tree_params = params.tree.clone();
    if tree_params.max_features.is_none() {
        tree_params.max_features = Some(default_max_features(data.n_features()));
    }
    let n = data.n_rows();
    let trees = (0..params.n_estimators.max(1))
        .into_par_iter()
        .map(|i| {
            let tree_seed = seed.wrapping_add(i as u64);
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = seed::rng(seed::derive_seed(tree_seed, "bootstrap", ""));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::grow(data, &rows, &tree_params, &mut seed::rng(tree_seed))
        })
        .collect();
    Ok(RandomForest {
        trees,
        class_count: data.class_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::{train_tree, Node};
    use ndarray::array;

    fn stump_voting(class: usize) -> DecisionTree {
        let mut distribution = vec![0.0; 2];
        distribution[class] = 1.0;
        DecisionTree {
            nodes: vec![Node::Leaf { distribution }],
            class_count: 2,
        }
    }

    #[test]
    fn sqrt_rule_for_thirteen_features() {
        assert_eq!(default_max_features(13), 4);
        assert_eq!(default_max_features(1), 1);
    }

    #[test]
    fn single_tree_without_bootstrap_matches_plain_tree() {
        let x = Array2::from_shape_fn((50, 4), |(i, j)| ((i * 13 + j * 7) % 19) as f64);
        let y: Vec<usize> = (0..50).map(|i| (i % 4 == 0) as usize).collect();
        let data = TrainSet::new(&x, &y, 2).unwrap();
        let tp = TreeParams {
            max_features: Some(2),
            ..TreeParams::default()
        };
        let forest = train_forest(
            &data,
            &ForestParams {
                n_estimators: 1,
                bootstrap: false,
                tree: tp.clone(),
            },
            77,
        )
        .unwrap();
        let tree = train_tree(&data, &tp, 77).unwrap();
        assert_eq!(forest.scores(x.view()), tree.scores(x.view()));
    }

    #[test]
    fn hard_votes_average_to_vote_share() {
        let trees: Vec<DecisionTree> = (0..100).map(|i| stump_voting(usize::from(i < 60))).collect();
        let f = RandomForest { trees, class_count: 2 };
        let s = f.scores(array![[0.0]].view());
        // 60 of 100 trees vote class 1.
        assert!((s[[0, 1]] - 60.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn unanimous_vote_gives_one() {
        let f = RandomForest {
            trees: vec![stump_voting(1); 7],
            class_count: 2,
        };
        assert_eq!(f.scores(array![[3.0]].view()).row(0).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn forest_is_deterministic() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 11 + j * 5) % 13) as f64);
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let data = TrainSet::new(&x, &y, 2).unwrap();
        let p = ForestParams {
            n_estimators: 10,
            ..Default::default()
        };
        assert_eq!(train_forest(&data, &p, 5).unwrap(), train_forest(&data, &p, 5).unwrap());
    }
}
