use super::{majority, ClassifierError, ModelFamily, Result, Samples};

pub(super) fn most_frequent(data: Samples<'_>) -> bool {
    let n_true = data.n_true();
    majority(n_true, data.len() - n_true)
}

/// Fraction of `true` labels; both classes must be present.
pub(super) fn stratified_rate(data: Samples<'_>) -> Result<f64> {
    let n_true = data.n_true();
    if n_true == 0 || n_true == data.len() {
        return Err(ClassifierError::DegenerateTrainingSet(ModelFamily::Stratified));
    }
    Ok(n_true as f64 / data.len() as f64)
}
