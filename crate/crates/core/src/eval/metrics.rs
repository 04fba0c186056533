use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("{predictions} predictions for {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no predictions to score")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub classification_accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

/// Per-class confusion counts summed over both classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MicroCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub correct: u64,
    pub total: u64,
}

impl MicroCounts {
    pub fn tally(predictions: &[bool], gold: &[bool]) -> Self {
        let mut c = Self::default();
        for class in [true, false] {
            for (&p, &g) in predictions.iter().zip(gold) {
                match (p == class, g == class) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => {}
                }
            }
        }
        c.correct = predictions.iter().zip(gold).filter(|(p, g)| p == g).count() as u64;
        c.total = predictions.len() as u64;
        c
    }

    pub fn metrics(&self) -> MetricSet {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        MetricSet {
            classification_accuracy: ratio(self.correct, self.total),
            micro_precision: ratio(self.tp, self.tp + self.fp),
            micro_recall: ratio(self.tp, self.tp + self.fn_),
            // 2TP / (2TP + FP + FN): the harmonic mean of P and R over one
            // shared division, so it rounds exactly like P and R do
            micro_f1: ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
        }
    }
}

/// Micro-averaged precision, recall and F1 over both classes, plus accuracy.
///
/// With one prediction per instance, summed TP+FP and TP+FN both equal the
/// number of predictions, so all four values coincide; this is asserted.
pub fn micro_metrics(predictions: &[bool], gold: &[bool]) -> Result<MetricSet, MetricError> {
    if predictions.len() != gold.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let m = MicroCounts::tally(predictions, gold).metrics();
    assert!(
        m.micro_precision == m.classification_accuracy
            && m.micro_recall == m.classification_accuracy
            && m.micro_f1 == m.classification_accuracy,
        "micro metrics diverged from accuracy: {m:?}"
    );
    Ok(m)
}

impl MetricSet {
    /// Unweighted mean over folds.
    pub fn mean(sets: &[MetricSet]) -> MetricSet {
        let n = sets.len() as f64;
        let avg = |f: fn(&MetricSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
        MetricSet {
            classification_accuracy: avg(|m| m.classification_accuracy),
            micro_precision: avg(|m| m.micro_precision),
            micro_recall: avg(|m| m.micro_recall),
            micro_f1: avg(|m| m.micro_f1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_enumerated_confusion() {
        // class T: tp 1, fp 1, fn 1; class F: tp 1, fp 1, fn 1
        let preds = [true, true, false, false];
        let gold = [true, false, true, false];
        let c = MicroCounts::tally(&preds, &gold);
        assert_eq!((c.tp, c.fp, c.fn_), (2, 2, 2));
        let m = micro_metrics(&preds, &gold).unwrap();
        assert_eq!(m.classification_accuracy, 0.5);
        assert_eq!(m.micro_precision, 0.5);
        assert_eq!(m.micro_recall, 0.5);
        assert_eq!(m.micro_f1, 0.5);
    }

    #[test]
    fn perfect_and_all_wrong() {
        let gold = [true, false, false, true, false];
        let m = micro_metrics(&gold, &gold).unwrap();
        assert_eq!(
            [m.classification_accuracy, m.micro_precision, m.micro_recall, m.micro_f1],
            [1.0; 4]
        );
        let flipped: Vec<bool> = gold.iter().map(|g| !g).collect();
        let m = micro_metrics(&flipped, &gold).unwrap();
        assert_eq!(
            [m.classification_accuracy, m.micro_precision, m.micro_recall, m.micro_f1],
            [0.0; 4]
        );
    }

    #[test]
    fn input_errors() {
        assert_eq!(micro_metrics(&[], &[]), Err(MetricError::EmptyInput));
        assert_eq!(
            micro_metrics(&[true], &[true, false]),
            Err(MetricError::LengthMismatch { predictions: 1, gold: 2 })
        );
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
            let (p, g): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let m = micro_metrics(&p, &g).unwrap();
            let hm = if m.micro_precision + m.micro_recall == 0.0 {
                0.0
            } else {
                2.0 * m.micro_precision * m.micro_recall / (m.micro_precision + m.micro_recall)
            };
            prop_assert!((m.micro_f1 - hm).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&m.micro_f1));
        }
    }
}
