//! Linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss.
//!
//! The bias is folded in as a constant feature, so it is regularized along
//! with the weights. Step size at update `t` is `1 / (lambda * t)`; after
//! each step the iterate is projected onto the ball of radius
//! `1 / sqrt(lambda)`, which contains the optimum.

use serde::{Deserialize, Serialize};

use super::{Samples, Scaler};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: Scaler,
}

const SHUFFLE_STREAM: u64 = 0x73_766d;

impl LinearSvm {
    pub fn fit(data: Samples<'_>, lambda: f64, epochs: usize, seed: u64) -> Self {
        let scaler = Scaler::fit(data);
        let xs: Vec<Vec<f64>> = data
            .rows
            .iter()
            .map(|r| {
                let mut x = scaler.transform(r);
                x.push(1.0);
                x
            })
            .collect();
        let ys: Vec<f64> = data.labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let d = xs[0].len();
        let radius = 1.0 / lambda.sqrt();

        let mut w = vec![0.0; d];
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut rng = rng::stream(seed, SHUFFLE_STREAM);
        let mut t = 0u64;
        for _ in 0..epochs {
            rng::shuffle(&mut rng, &mut order);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let x = &xs[i];
                let violated = ys[i] * dot(&w, x) < 1.0;
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|e| *e *= shrink);
                if violated {
                    for (e, xi) in w.iter_mut().zip(x) {
                        *e += eta * ys[i] * xi;
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let f = radius / norm;
                    w.iter_mut().for_each(|e| *e *= f);
                }
            }
        }
        Self {
            weights: w[..d - 1].to_vec(),
            bias: w[d - 1],
            scaler,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, &self.scaler.transform(x)) + self.bias
    }

    /// Strictly positive margin is `true`; zero is `false`.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        self.scaler.validate(n_features)?;
        if self.weights.len() != n_features {
            return Err("svm weight count does not match feature count".into());
        }
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err("svm weights are not finite".into());
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
