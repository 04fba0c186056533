use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{majority, DecisionTree, Samples, TreeParams};
use crate::rng;

/// Bagged CART trees with per-node feature subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

const BOOTSTRAP_STREAM: u64 = 0x626f_6f74;
const FEATURE_STREAM: u64 = 0x6665_6174;

/// Bootstrap row indices for tree `tree` of a forest seeded with `seed`.
pub fn bootstrap_sample(n: usize, seed: u64, tree: usize) -> Vec<usize> {
    let mut r = rng::stream(rng::derive(seed, tree as u64), BOOTSTRAP_STREAM);
    (0..n).map(|_| rng::below(&mut r, n as u64) as usize).collect()
}

impl RandomForest {
    /// `max_features` defaults to `ceil(sqrt(d))`. Trees are grown in
    /// parallel, each from its own seed stream.
    pub fn fit(
        data: Samples<'_>,
        n_estimators: usize,
        max_features: Option<usize>,
        max_leaf_nodes: Option<usize>,
        seed: u64,
    ) -> Self {
        let d = data.rows[0].len();
        let params = TreeParams {
            max_leaf_nodes,
            max_features: Some(max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))),
        };
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|t| {
                let sample = bootstrap_sample(data.len(), seed, t);
                let mut feature_rng = rng::stream(rng::derive(seed, t as u64), FEATURE_STREAM);
                DecisionTree::fit_indices(data, sample, &params, Some(&mut feature_rng))
            })
            .collect();
        Self { trees }
    }

    /// Majority vote; an even vote is `false`.
    pub fn predict(&self, x: &[f64]) -> bool {
        let n_true = self.trees.iter().filter(|t| t.predict(x)).count();
        majority(n_true, self.trees.len() - n_true)
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.trees.is_empty() {
            return Err("forest has no trees".into());
        }
        self.trees.iter().try_for_each(|t| t.validate(n_features))
    }
}
