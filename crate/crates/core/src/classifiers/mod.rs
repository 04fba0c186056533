//! Binary classifiers and dummy baselines behind one train/predict contract.
//!
//! Every family is implemented here from first principles. Labels are
//! `bool` (`true` = barrier present) and every tie in a decision resolves to
//! `false`.

mod baseline;
mod forest;
mod knn;
mod naive_bayes;
mod scaler;
mod svm;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use forest::{bootstrap_sample, RandomForest};
pub use knn::Knn;
pub use naive_bayes::GaussianNb;
pub use scaler::Scaler;
pub use svm::LinearSvm;
pub use tree::{DecisionTree, Node, TreeParams};

use crate::eval::metrics::micro_metrics;
use crate::features::LabeledInstance;

pub const MODEL_FORMAT: &str = "barrier-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{0} needs both classes in the training set")]
    DegenerateTrainingSet(ModelFamily),
    #[error("expected {expected} features, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("hyperparameter `{name}` = {value} is invalid for {family}")]
    InvalidHyperparameter { family: ModelFamily, name: String, value: f64 },
    #[error("unknown model family `{0}`")]
    UnknownFamily(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;

/// Declaration order is the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Uniform,
    Stratified,
    MostFrequent,
    Svm,
    Knn,
    DecisionTree,
    RandomForest,
    NaiveBayes,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 8] = [
        ModelFamily::Uniform,
        ModelFamily::Stratified,
        ModelFamily::MostFrequent,
        ModelFamily::Svm,
        ModelFamily::Knn,
        ModelFamily::DecisionTree,
        ModelFamily::RandomForest,
        ModelFamily::NaiveBayes,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ModelFamily::Uniform => "uniform",
            ModelFamily::Stratified => "stratified",
            ModelFamily::MostFrequent => "most-frequent",
            ModelFamily::Svm => "svm",
            ModelFamily::Knn => "knn",
            ModelFamily::DecisionTree => "decision-tree",
            ModelFamily::RandomForest => "random-forest",
            ModelFamily::NaiveBayes => "naive-bayes",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::Uniform => "Uniform",
            ModelFamily::Stratified => "Stratified",
            ModelFamily::MostFrequent => "Most Frequent",
            ModelFamily::Svm => "SVM",
            ModelFamily::Knn => "kNN",
            ModelFamily::DecisionTree => "Decision Tree",
            ModelFamily::RandomForest => "Random Forest",
            ModelFamily::NaiveBayes => "Naive Bayes",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, ModelFamily::Uniform | ModelFamily::Stratified | ModelFamily::MostFrequent)
    }

    /// Hyperparameters this family accepts, with their defaults.
    pub fn default_hyperparameters(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ModelFamily::Svm => &[("lambda", 1e-3), ("epochs", 50.0)],
            ModelFamily::Knn => &[("k", 5.0)],
            // 0 leaves means unlimited
            ModelFamily::DecisionTree => &[("max_leaf_nodes", 0.0)],
            // 0 features means ceil(sqrt(d))
            ModelFamily::RandomForest => &[("n_estimators", 100.0), ("max_features", 0.0), ("max_leaf_nodes", 0.0)],
            ModelFamily::NaiveBayes => &[("var_smoothing", 1e-9)],
            _ => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// The sweep grid used when none is configured.
    pub fn default_grid(self) -> HyperGrid {
        match self {
            ModelFamily::Svm => HyperGrid::axis("lambda", &[1e-4, 1e-3, 1e-2]),
            ModelFamily::Knn => HyperGrid::axis("k", &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 15.0]),
            ModelFamily::DecisionTree => {
                HyperGrid::axis("max_leaf_nodes", &[4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 0.0])
            }
            ModelFamily::RandomForest => HyperGrid::axis("n_estimators", &[10.0, 50.0, 100.0]),
            _ => HyperGrid::default(),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelFamily {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_lowercase();
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.slug().replace('-', "") == key)
            .ok_or_else(|| ClassifierError::UnknownFamily(s.to_string()))
    }
}

/// A family, its hyperparameters and the seed behind all its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, seed: u64) -> Self {
        Self {
            family,
            hyperparameters: family.default_hyperparameters(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    fn param(&self, name: &str) -> f64 {
        self.hyperparameters
            .get(name)
            .copied()
            .or_else(|| self.family.default_hyperparameters().get(name).copied())
            .unwrap_or(0.0)
    }

    fn invalid(&self, name: &str) -> ClassifierError {
        ClassifierError::InvalidHyperparameter {
            family: self.family,
            name: name.to_string(),
            value: self.param(name),
        }
    }

    /// Non-negative integer hyperparameter.
    fn count(&self, name: &str) -> Result<usize> {
        let v = self.param(name);
        if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(self.invalid(name))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.family.default_hyperparameters();
        for (name, value) in &self.hyperparameters {
            if !known.contains_key(name) || !value.is_finite() {
                return Err(ClassifierError::InvalidHyperparameter {
                    family: self.family,
                    name: name.clone(),
                    value: *value,
                });
            }
        }
        match self.family {
            ModelFamily::Svm => {
                if self.param("lambda") <= 0.0 {
                    return Err(self.invalid("lambda"));
                }
                if self.count("epochs")? == 0 {
                    return Err(self.invalid("epochs"));
                }
            }
            ModelFamily::Knn => {
                if self.count("k")? == 0 {
                    return Err(self.invalid("k"));
                }
            }
            ModelFamily::DecisionTree => {
                if self.count("max_leaf_nodes")? == 1 {
                    return Err(self.invalid("max_leaf_nodes"));
                }
            }
            ModelFamily::RandomForest => {
                if self.count("n_estimators")? == 0 {
                    return Err(self.invalid("n_estimators"));
                }
                self.count("max_features")?;
                if self.count("max_leaf_nodes")? == 1 {
                    return Err(self.invalid("max_leaf_nodes"));
                }
            }
            ModelFamily::NaiveBayes => {
                if self.param("var_smoothing") < 0.0 {
                    return Err(self.invalid("var_smoothing"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Grid points, each a set of hyperparameter overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub points: Vec<BTreeMap<String, f64>>,
}

impl HyperGrid {
    pub fn axis(name: &str, values: &[f64]) -> Self {
        Self {
            points: values
                .iter()
                .map(|v| BTreeMap::from([(name.to_string(), *v)]))
                .collect(),
        }
    }

    pub fn single(point: BTreeMap<String, f64>) -> Self {
        Self { points: vec![point] }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// `spec` with the overrides of point `i` applied.
    pub fn apply(&self, spec: &ModelSpec, i: usize) -> ModelSpec {
        let mut s = spec.clone();
        s.hyperparameters
            .extend(self.points[i].iter().map(|(k, v)| (k.clone(), *v)));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    Uniform,
    Stratified { p_true: f64 },
    MostFrequent { label: bool },
    Svm(LinearSvm),
    Knn(Knn),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    NaiveBayes(GaussianNb),
}

/// A fitted model. Immutable apart from the draw counter of the random
/// baselines, which advances once per prediction.
#[derive(Debug)]
pub struct TrainedModel {
    spec: ModelSpec,
    n_features: usize,
    params: ModelParams,
    draws: AtomicU64,
}

impl Clone for TrainedModel {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            n_features: self.n_features,
            params: self.params.clone(),
            draws: AtomicU64::new(self.draws.load(Ordering::SeqCst)),
        }
    }
}

impl PartialEq for TrainedModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.n_features == other.n_features
            && self.params == other.params
            && self.draws.load(Ordering::SeqCst) == other.draws.load(Ordering::SeqCst)
    }
}

const PREDICT_STREAM: u64 = 0x7072_6564;

impl TrainedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn family(&self) -> ModelFamily {
        self.spec.family
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Predictions drawn so far by a random baseline.
    pub fn draws(&self) -> u64 {
        self.draws.load(Ordering::SeqCst)
    }

    pub fn predict(&self, features: &[f64]) -> Result<bool> {
        if features.len() != self.n_features {
            return Err(ClassifierError::LengthMismatch {
                expected: self.n_features,
                got: features.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Uniform => self.next_unit() < 0.5,
            ModelParams::Stratified { p_true } => self.next_unit() < *p_true,
            ModelParams::MostFrequent { label } => *label,
            ModelParams::Svm(m) => m.predict(features),
            ModelParams::Knn(m) => m.predict(features),
            ModelParams::DecisionTree(m) => m.predict(features),
            ModelParams::RandomForest(m) => m.predict(features),
            ModelParams::NaiveBayes(m) => m.predict(features),
        })
    }

    pub fn predict_batch<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<bool>> {
        rows.iter().map(|r| self.predict(r.as_ref())).collect()
    }

    fn next_unit(&self) -> f64 {
        let n = self.draws.fetch_add(1, Ordering::SeqCst);
        crate::rng::nth_unit(crate::rng::derive(self.spec.seed, PREDICT_STREAM), n)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            spec: self.spec.clone(),
            n_features: self.n_features,
            draws: self.draws(),
            params: self.params.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parses and validates a model file; a model that loads can always
    /// predict without panicking.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ClassifierError::InvalidModel(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ClassifierError::InvalidModel(format!("format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(ClassifierError::InvalidModel(format!("version {}", file.version)));
        }
        file.spec.validate()?;
        validate_params(&file.params, file.spec.family, file.n_features)
            .map_err(ClassifierError::InvalidModel)?;
        Ok(Self {
            spec: file.spec,
            n_features: file.n_features,
            params: file.params,
            draws: AtomicU64::new(file.draws),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    spec: ModelSpec,
    n_features: usize,
    draws: u64,
    params: ModelParams,
}

fn validate_params(params: &ModelParams, family: ModelFamily, n_features: usize) -> Result<(), String> {
    let matches = matches!(
        (params, family),
        (ModelParams::Uniform, ModelFamily::Uniform)
            | (ModelParams::Stratified { .. }, ModelFamily::Stratified)
            | (ModelParams::MostFrequent { .. }, ModelFamily::MostFrequent)
            | (ModelParams::Svm(_), ModelFamily::Svm)
            | (ModelParams::Knn(_), ModelFamily::Knn)
            | (ModelParams::DecisionTree(_), ModelFamily::DecisionTree)
            | (ModelParams::RandomForest(_), ModelFamily::RandomForest)
            | (ModelParams::NaiveBayes(_), ModelFamily::NaiveBayes)
    );
    if !matches {
        return Err(format!("parameters do not belong to family {family}"));
    }
    match params {
        ModelParams::Stratified { p_true } if !(0.0..=1.0).contains(p_true) => {
            Err(format!("p_true {p_true} outside [0, 1]"))
        }
        ModelParams::Svm(m) => m.validate(n_features),
        ModelParams::Knn(m) => m.validate(n_features),
        ModelParams::DecisionTree(m) => m.validate(n_features),
        ModelParams::RandomForest(m) => m.validate(n_features),
        ModelParams::NaiveBayes(m) => m.validate(n_features),
        _ => Ok(()),
    }
}

/// Borrowed training rows with their labels.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub rows: &'a [&'a [f64]],
    pub labels: &'a [bool],
}

impl<'a> Samples<'a> {
    pub fn new(rows: &'a [&'a [f64]], labels: &'a [bool]) -> Self {
        assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
        Self { rows, labels }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_true(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }
}

/// Majority label; a tie goes to `false`.
pub(crate) fn majority(n_true: usize, n_false: usize) -> bool {
    n_true > n_false
}

/// Fits `spec` on labeled instances.
pub fn train(spec: &ModelSpec, data: &[LabeledInstance]) -> Result<TrainedModel> {
    let rows: Vec<&[f64]> = data.iter().map(|i| i.features.as_slice()).collect();
    let labels: Vec<bool> = data.iter().map(|i| i.label).collect();
    train_samples(spec, Samples::new(&rows, &labels))
}

pub fn train_samples(spec: &ModelSpec, data: Samples<'_>) -> Result<TrainedModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let n_features = data.rows[0].len();
    if let Some(bad) = data.rows.iter().find(|r| r.len() != n_features) {
        return Err(ClassifierError::LengthMismatch {
            expected: n_features,
            got: bad.len(),
        });
    }
    let params = match spec.family {
        ModelFamily::Uniform => ModelParams::Uniform,
        ModelFamily::Stratified => ModelParams::Stratified {
            p_true: baseline::stratified_rate(data)?,
        },
        ModelFamily::MostFrequent => ModelParams::MostFrequent {
            label: baseline::most_frequent(data),
        },
        ModelFamily::Svm => ModelParams::Svm(LinearSvm::fit(
            data,
            spec.param("lambda"),
            spec.count("epochs")?,
            spec.seed,
        )),
        ModelFamily::Knn => ModelParams::Knn(Knn::fit(data, spec.count("k")?)),
        ModelFamily::DecisionTree => ModelParams::DecisionTree(DecisionTree::fit(
            data,
            &TreeParams {
                max_leaf_nodes: nonzero(spec.count("max_leaf_nodes")?),
                max_features: None,
            },
        )),
        ModelFamily::RandomForest => ModelParams::RandomForest(RandomForest::fit(
            data,
            spec.count("n_estimators")?,
            nonzero(spec.count("max_features")?),
            nonzero(spec.count("max_leaf_nodes")?),
            spec.seed,
        )),
        ModelFamily::NaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(data, spec.param("var_smoothing"))?),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_features,
        params,
        draws: AtomicU64::new(0),
    })
}

fn nonzero(v: usize) -> Option<usize> {
    (v > 0).then_some(v)
}

/// Result of a hyperparameter sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub spec: ModelSpec,
    pub model: TrainedModel,
    /// Micro-F1 of the winner on the evaluation split.
    pub score: f64,
    /// The winner's predictions on the evaluation split.
    pub predictions: Vec<bool>,
    pub index: usize,
}

/// Trains every grid point on `train` and keeps the one with the best
/// micro-F1 on `eval`; the first point wins ties.
pub fn sweep(base: &ModelSpec, grid: &HyperGrid, train: Samples<'_>, eval: Samples<'_>) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    let mut best: Option<SweepOutcome> = None;
    for i in 0..grid.len() {
        let spec = grid.apply(base, i);
        let model = train_samples(&spec, train)?;
        let predictions = model.predict_batch(eval.rows)?;
        let score = if eval.is_empty() {
            0.0
        } else {
            micro_metrics(&predictions, eval.labels)
                .expect("lengths match and input is non-empty")
                .micro_f1
        };
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(SweepOutcome {
                spec,
                model,
                score,
                predictions,
                index: i,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}
