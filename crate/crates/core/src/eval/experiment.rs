use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, FoldError};
use super::metrics::{micro_metrics, MetricError, MetricSet};
use super::report::ReportRow;
use crate::annotate::BarrierDataset;
use crate::classifiers::{sweep, train_samples, ClassifierError, HyperGrid, ModelSpec, Samples};
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("{family}: {source}")]
    Classifier {
        family: String,
        #[source]
        source: ClassifierError,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A model family to evaluate, with the grid swept inside each fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentModel {
    pub spec: ModelSpec,
    pub grid: HyperGrid,
}

impl ExperimentModel {
    pub fn fixed(spec: ModelSpec) -> Self {
        Self {
            spec,
            grid: HyperGrid::default(),
        }
    }

    /// Default hyperparameters and the family's default grid.
    pub fn with_default_grid(spec: ModelSpec) -> Self {
        let grid = spec.family.default_grid();
        Self { spec, grid }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub k: usize,
    pub seed: u64,
    /// Select grid points by inner cross-validation on the training folds
    /// instead of on the test fold.
    pub nested: bool,
    /// Average per-fold metrics instead of pooling all predictions.
    pub fold_mean: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            nested: false,
            fold_mean: false,
        }
    }
}

pub const INNER_FOLDS: usize = 3;

struct FoldResult {
    test: Vec<usize>,
    predictions: Vec<bool>,
    selected: Option<usize>,
}

fn classifier_err(spec: &ModelSpec) -> impl Fn(ClassifierError) -> ExperimentError + '_ {
    move |source| ExperimentError::Classifier {
        family: spec.family.to_string(),
        source,
    }
}

fn pick<'a>(rows: &[&'a [f64]], labels: &[bool], idx: &[usize]) -> (Vec<&'a [f64]>, Vec<bool>) {
    (idx.iter().map(|&i| rows[i]).collect(), idx.iter().map(|&i| labels[i]).collect())
}

/// Grid index with the best pooled inner-CV micro-F1; first wins ties.
fn select_nested(
    model: &ExperimentModel,
    spec: &ModelSpec,
    rows: &[&[f64]],
    labels: &[bool],
    seed: u64,
) -> Result<usize, ExperimentError> {
    let inner = stratified_kfold(labels, INNER_FOLDS, seed)?;
    let mut best = (0usize, f64::NEG_INFINITY);
    for g in 0..model.grid.len() {
        let point = model.grid.apply(spec, g);
        let mut preds = vec![false; labels.len()];
        for f in 0..INNER_FOLDS {
            let (tr, te) = (inner.train_indices(f), inner.test_indices(f));
            let (tr_rows, tr_labels) = pick(rows, labels, &tr);
            let m = train_samples(&point, Samples::new(&tr_rows, &tr_labels)).map_err(classifier_err(spec))?;
            for &i in &te {
                preds[i] = m.predict(rows[i]).map_err(classifier_err(spec))?;
            }
        }
        let score = micro_metrics(&preds, labels)?.micro_f1;
        if score > best.1 {
            best = (g, score);
        }
    }
    Ok(best.0)
}

fn run_fold(
    model: &ExperimentModel,
    rows: &[&[f64]],
    labels: &[bool],
    train_idx: &[usize],
    test_idx: Vec<usize>,
    fold: usize,
    options: &ExperimentOptions,
) -> Result<FoldResult, ExperimentError> {
    let mut spec = model.spec.clone();
    spec.seed = rng::derive(model.spec.seed, fold as u64);
    let (tr_rows, tr_labels) = pick(rows, labels, train_idx);
    let (te_rows, te_labels) = pick(rows, labels, &test_idx);
    let train = Samples::new(&tr_rows, &tr_labels);

    if model.grid.is_empty() {
        let m = train_samples(&spec, train).map_err(classifier_err(&spec))?;
        let predictions = m.predict_batch(&te_rows).map_err(classifier_err(&spec))?;
        return Ok(FoldResult {
            test: test_idx,
            predictions,
            selected: None,
        });
    }
    if options.nested {
        let g = select_nested(model, &spec, &tr_rows, &tr_labels, rng::derive(spec.seed, 0x696e))?;
        let m = train_samples(&model.grid.apply(&spec, g), train).map_err(classifier_err(&spec))?;
        let predictions = m.predict_batch(&te_rows).map_err(classifier_err(&spec))?;
        return Ok(FoldResult {
            test: test_idx,
            predictions,
            selected: Some(g),
        });
    }
    let out = sweep(&spec, &model.grid, train, Samples::new(&te_rows, &te_labels)).map_err(classifier_err(&spec))?;
    Ok(FoldResult {
        test: test_idx,
        predictions: out.predictions,
        selected: Some(out.index),
    })
}

/// Stratified k-fold evaluation of every model on one barrier dataset.
///
/// Folds run in parallel; each fold derives its own seed, so results do not
/// depend on the thread count.
pub fn run_experiment(
    dataset: &BarrierDataset,
    models: &[ExperimentModel],
    options: &ExperimentOptions,
) -> Result<Vec<ReportRow>, ExperimentError> {
    let labels = dataset.labels();
    let rows: Vec<&[f64]> = dataset.instances.iter().map(|i| i.features.as_slice()).collect();
    let folds = stratified_kfold(&labels, options.k, options.seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..options.k)
        .map(|f| (folds.train_indices(f), folds.test_indices(f)))
        .collect();

    let mut out = Vec::with_capacity(models.len());
    for model in models {
        let results: Vec<FoldResult> = splits
            .par_iter()
            .enumerate()
            .map(|(f, (tr, te))| run_fold(model, &rows, &labels, tr, te.clone(), f, options))
            .collect::<Result<_, _>>()?;

        let mut pooled: Vec<Option<bool>> = vec![None; labels.len()];
        let mut per_fold = Vec::with_capacity(results.len());
        for r in &results {
            for (&i, &p) in r.test.iter().zip(&r.predictions) {
                debug_assert!(pooled[i].is_none(), "instance tested twice");
                pooled[i] = Some(p);
            }
            let gold: Vec<bool> = r.test.iter().map(|&i| labels[i]).collect();
            per_fold.push(micro_metrics(&r.predictions, &gold)?);
        }
        let predictions: Vec<bool> = pooled
            .into_iter()
            .map(|p| p.expect("every instance is tested exactly once"))
            .collect();
        let metrics = if options.fold_mean {
            MetricSet::mean(&per_fold)
        } else {
            micro_metrics(&predictions, &labels)?
        };
        out.push(ReportRow {
            barrier: dataset.barrier,
            family: model.spec.family,
            metrics,
            n_predictions: predictions.len(),
            selected: results.iter().filter_map(|r| r.selected).collect(),
        });
    }
    Ok(out)
}
