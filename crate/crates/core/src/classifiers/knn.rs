use serde::{Deserialize, Serialize};

use super::{majority, Samples, Scaler};

/// k-nearest neighbours on standardized features, Euclidean distance.
///
/// Equal distances prefer the lower training index; an even vote is `false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub scaler: Scaler,
    /// Standardized training rows, flattened row-major.
    pub points: Vec<f64>,
    pub labels: Vec<bool>,
}

impl Knn {
    pub fn fit(data: Samples<'_>, k: usize) -> Self {
        let scaler = Scaler::fit(data);
        let points = data.rows.iter().flat_map(|r| scaler.transform(r)).collect();
        Self {
            k,
            scaler,
            points,
            labels: data.labels.to_vec(),
        }
    }

    fn width(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Indices of the `k` nearest training points, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let q = self.scaler.transform(x);
        let d = self.width();
        let mut dist: Vec<(f64, usize)> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let p = &self.points[i * d..(i + 1) * d];
                let s: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let nn = self.neighbors(x);
        let n_true = nn.iter().filter(|&&i| self.labels[i]).count();
        majority(n_true, nn.len() - n_true)
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        self.scaler.validate(n_features)?;
        if self.k == 0 {
            return Err("k must be positive".into());
        }
        if self.labels.is_empty() || self.points.len() != self.labels.len() * n_features {
            return Err("knn points do not match labels and feature count".into());
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err("knn points are not finite".into());
        }
        Ok(())
    }
}
