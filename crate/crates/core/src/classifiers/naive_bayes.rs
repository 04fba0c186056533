use serde::{Deserialize, Serialize};

use super::{ClassifierError, ModelFamily, Samples};

/// Gaussian naive Bayes with log-space scoring.
///
/// Every class variance is inflated by `var_smoothing` times the largest
/// per-feature variance of the whole training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Index 0 is the `false` class, index 1 the `true` class.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

fn moments<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for r in rows.clone() {
        n += 1;
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    (mean, var)
}

impl GaussianNb {
    pub fn fit(data: Samples<'_>, var_smoothing: f64) -> Result<Self, ClassifierError> {
        let n_true = data.n_true();
        if n_true == 0 || n_true == data.len() {
            return Err(ClassifierError::DegenerateTrainingSet(ModelFamily::NaiveBayes));
        }
        let d = data.rows[0].len();
        let (_, overall) = moments(data.rows.iter().copied(), d);
        let mut epsilon = var_smoothing * overall.iter().cloned().fold(0.0, f64::max);
        if epsilon <= 0.0 {
            epsilon = var_smoothing.max(f64::MIN_POSITIVE);
        }
        let class_rows = |class: bool| {
            data.rows
                .iter()
                .zip(data.labels)
                .filter(move |(_, l)| **l == class)
                .map(|(r, _)| *r)
        };
        let (m0, mut v0) = moments(class_rows(false), d);
        let (m1, mut v1) = moments(class_rows(true), d);
        v0.iter_mut().chain(v1.iter_mut()).for_each(|v| *v += epsilon);
        let n = data.len() as f64;
        Ok(Self {
            log_prior: [((data.len() - n_true) as f64 / n).ln(), (n_true as f64 / n).ln()],
            mean: [m0, m1],
            var: [v0, v1],
        })
    }

    pub fn log_joint(&self, x: &[f64]) -> [f64; 2] {
        let score = |c: usize| {
            self.log_prior[c]
                + x.iter()
                    .zip(&self.mean[c])
                    .zip(&self.var[c])
                    .map(|((x, m), v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                    .sum::<f64>()
        };
        [score(0), score(1)]
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let [f, t] = self.log_joint(x);
        t > f
    }

    pub(super) fn validate(&self, n_features: usize) -> Result<(), String> {
        for c in 0..2 {
            if self.mean[c].len() != n_features || self.var[c].len() != n_features {
                return Err("naive bayes width does not match feature count".into());
            }
            if self.var[c].iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.mean[c].iter().any(|m| !m.is_finite())
            {
                return Err("naive bayes holds invalid moments".into());
            }
            if self.log_prior[c].is_nan() {
                return Err("naive bayes prior is NaN".into());
            }
        }
        Ok(())
    }
}
