//! Binary CART with Gini impurity.
//!
//! Growth is best-first: the open leaf whose best split removes the most
//! impurity is expanded next, until `max_leaf_nodes` is reached or no leaf
//! can be split. Any impure leaf with a non-constant feature is splittable,
//! even at zero gain. Candidate splits are compared by impurity and ties go
//! to the lower (feature index, threshold).

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{majority, Samples};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum Node {
    Leaf { label: bool },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Arena of nodes; index 0 is the root and children always follow parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeParams {
    /// `None` grows until every leaf is pure or unsplittable.
    pub max_leaf_nodes: Option<usize>,
    /// Features examined per node; `None` examines all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    /// Impurity removed, in count units (n * gini).
    gain: f64,
}

struct Open {
    node: usize,
    samples: Vec<usize>,
    split: Option<Split>,
}

/// `n * gini` for a node with the given class counts.
fn weighted_gini(n_true: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (t, n_f) = (n_true as f64, n as f64);
    let f = n_f - t;
    n_f - (t * t + f * f) / n_f
}

impl DecisionTree {
    pub fn fit(data: Samples<'_>, params: &TreeParams) -> Self {
        let all: Vec<usize> = (0..data.len()).collect();
        Self::fit_indices::<rand_chacha::ChaCha8Rng>(data, all, params, None)
    }

    /// Grows on a (possibly repeated) subset of rows; `rng` drives the
    /// per-node feature subsets when `max_features` is set.
    pub(super) fn fit_indices<R: RngCore>(
        data: Samples<'_>,
        samples: Vec<usize>,
        params: &TreeParams,
        mut rng: Option<&mut R>,
    ) -> Self {
        let n_features = data.rows[0].len();
        let mut nodes = vec![Node::Leaf {
            label: leaf_label(data, &samples),
        }];
        let root_split = best_split(data, &samples, n_features, params.max_features, rng.as_deref_mut());
        let mut open = vec![Open {
            node: 0,
            samples,
            split: root_split,
        }];
        let mut leaves = 1usize;

        loop {
            if params.max_leaf_nodes.is_some_and(|m| leaves >= m) {
                break;
            }
            let mut pick: Option<usize> = None;
            for (i, o) in open.iter().enumerate() {
                if let Some(s) = o.split {
                    if pick.is_none_or(|p| s.gain > open[p].split.unwrap().gain) {
                        pick = Some(i);
                    }
                }
            }
            let Some(pick) = pick else { break };
            let Open { node, samples, split } = open.remove(pick);
            let split = split.unwrap();
            let (left_s, right_s): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&i| data.rows[i][split.feature] <= split.threshold);

            let left = nodes.len();
            nodes.push(Node::Leaf {
                label: leaf_label(data, &left_s),
            });
            let right = nodes.len();
            nodes.push(Node::Leaf {
                label: leaf_label(data, &right_s),
            });
            nodes[node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            leaves += 1;

            let ls = best_split(data, &left_s, n_features, params.max_features, rng.as_deref_mut());
            let rs = best_split(data, &right_s, n_features, params.max_features, rng.as_deref_mut());
            // keep `open` in node-id order so gain ties pick the oldest leaf
            open.push(Open {
                node: left,
                samples: left_s,
                split: ls,
            });
            open.push(Open {
                node: right,
                samples: right_s,
                split: rs,
            });
        }
        Self { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = n
            {
                if *feature >= n_features || threshold.is_nan() {
                    return Err(format!("node {i} has an invalid split"));
                }
                if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                    return Err(format!("node {i} has invalid children"));
                }
            }
        }
        Ok(())
    }
}

fn leaf_label(data: Samples<'_>, samples: &[usize]) -> bool {
    let n_true = samples.iter().filter(|&&i| data.labels[i]).count();
    majority(n_true, samples.len() - n_true)
}

/// Features to examine at one node: all of them, or a random subset that
/// keeps drawing until `max` non-constant features have been seen.
fn candidate_features<R: RngCore>(
    data: Samples<'_>,
    samples: &[usize],
    n_features: usize,
    max: Option<usize>,
    rng: Option<&mut R>,
) -> Vec<usize> {
    let non_constant = |f: usize| {
        let first = data.rows[samples[0]][f];
        samples.iter().any(|&i| data.rows[i][f] != first)
    };
    match (max, rng) {
        (Some(m), Some(rng)) if m < n_features => {
            let mut order: Vec<usize> = (0..n_features).collect();
            rng::shuffle(rng, &mut order);
            let mut chosen = Vec::with_capacity(m);
            for f in order {
                if non_constant(f) {
                    chosen.push(f);
                    if chosen.len() == m {
                        break;
                    }
                }
            }
            chosen.sort_unstable();
            chosen
        }
        _ => (0..n_features).filter(|&f| non_constant(f)).collect(),
    }
}

fn best_split<R: RngCore>(
    data: Samples<'_>,
    samples: &[usize],
    n_features: usize,
    max_features: Option<usize>,
    rng: Option<&mut R>,
) -> Option<Split> {
    let n = samples.len();
    let n_true = samples.iter().filter(|&&i| data.labels[i]).count();
    if n < 2 || n_true == 0 || n_true == n {
        return None;
    }
    let parent = weighted_gini(n_true, n);
    let mut best: Option<(f64, Split)> = None;
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
    for f in candidate_features(data, samples, n_features, max_features, rng) {
        column.clear();
        column.extend(samples.iter().map(|&i| (data.rows[i][f], data.labels[i])));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_true = 0usize;
        for j in 0..n - 1 {
            if column[j].1 {
                left_true += 1;
            }
            let (a, b) = (column[j].0, column[j + 1].0);
            if a == b {
                continue;
            }
            let n_left = j + 1;
            let impurity = weighted_gini(left_true, n_left) + weighted_gini(n_true - left_true, n - n_left);
            if best.is_none_or(|(bi, _)| impurity < bi) {
                let mut threshold = a / 2.0 + b / 2.0;
                if threshold >= b || threshold < a {
                    threshold = a;
                }
                best = Some((
                    impurity,
                    Split {
                        feature: f,
                        threshold,
                        gain: parent - impurity,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}
