use serde::{Deserialize, Serialize};

use super::Samples;

/// Per-feature standardization captured from training data.
///
/// Zero-variance features are centered but not divided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(data: Samples<'_>) -> Self {
        let d = data.rows[0].len();
        let n = data.len() as f64;
        let mut mean = vec![0.0; d];
        for r in data.rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in data.rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Self { mean, std }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { x - m })
            .collect()
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        if self.mean.len() != n_features || self.std.len() != n_features {
            return Err("scaler width does not match feature count".into());
        }
        if self.mean.iter().chain(&self.std).any(|v| !v.is_finite()) || self.std.iter().any(|s| *s < 0.0) {
            return Err("scaler holds invalid statistics".into());
        }
        Ok(())
    }
}
