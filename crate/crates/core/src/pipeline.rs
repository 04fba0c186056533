//! End-to-end runs: ingest, annotate, features, experiment, report.
//!
//! Each stage writes its output to the run directory, so a run can be
//! inspected or resumed stage by stage. The effective configuration is
//! written back as `config.toml` with absolute paths; running that file
//! again reproduces the report byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::{build_barrier_dataset, save_dataset, AnnotateOptions, BarrierDataset, DEFAULT_SIMILARITY_THRESHOLD};
use crate::barrier::BarrierKind;
use crate::classifiers::{HyperGrid, ModelFamily, ModelSpec};
use crate::eval::{run_experiment, DatasetSummary, ExperimentModel, ExperimentOptions, ReportFormat, ReportTable};
use crate::features::{build_vocabulary, ConceptVocabulary, ProfileSide, DEFAULT_VOCABULARY_SIZE};
use crate::ingest::{parse_pairs, to_spreading_examples, ConceptIndex, IngestReport, SpreadingExample};
use crate::knowledge::{KnowledgeBase, ProfileOptions, ProfileStore, PublisherStore};

pub const CONFIG_FILE: &str = "config.toml";
pub const INGEST_REPORT_FILE: &str = "ingest_report.txt";
pub const VOCABULARY_FILE: &str = "vocabulary.csv";
pub const DATASETS_DIR: &str = "datasets";
pub const REPORT_MD_FILE: &str = "report.md";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const RESULTS_FILE: &str = "results.json";

/// Run configuration. Relative paths resolve against the directory of the
/// file they were read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub event: String,
    pub pairs: PathBuf,
    pub concepts: PathBuf,
    pub countries: PathBuf,
    pub publishers: PathBuf,
    /// Run directory; must be set before a run.
    pub output_dir: PathBuf,
    /// Barrier slugs; empty runs all five.
    pub barriers: Vec<String>,
    /// Model slugs; empty runs all eight.
    pub models: Vec<String>,
    pub vocabulary_size: usize,
    pub threshold: f64,
    pub folds: usize,
    pub seed: u64,
    /// Build the vocabulary over every article in the concept file instead
    /// of over the spreading examples only.
    pub global_vocab: bool,
    pub nested: bool,
    pub fold_mean: bool,
    pub profile_side: ProfileSide,
    /// Economic indicator names; empty uses all of them.
    pub economic_indicators: Vec<String>,
    pub min_max_scale: bool,
    /// Fixed hyperparameters per model slug.
    pub hyperparameters: BTreeMap<String, BTreeMap<String, f64>>,
    /// Sweep axes per model slug; the grid is their cartesian product. An
    /// empty table turns the sweep off for that model.
    pub grids: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            event: "event".into(),
            pairs: PathBuf::new(),
            concepts: PathBuf::new(),
            countries: PathBuf::new(),
            publishers: PathBuf::new(),
            output_dir: PathBuf::new(),
            barriers: Vec::new(),
            models: Vec::new(),
            vocabulary_size: DEFAULT_VOCABULARY_SIZE,
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            folds: 10,
            seed: 0,
            global_vocab: false,
            nested: false,
            fold_mean: false,
            profile_side: ProfileSide::Source,
            economic_indicators: Vec::new(),
            min_max_scale: false,
            hyperparameters: BTreeMap::new(),
            grids: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }
}

/// A failed stage with a one-line cause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn new(kind: ErrorKind, stage: &'static str, message: impl fmt::Display) -> Self {
        // keep causes on one line
        let message = message.to_string().replace('\n', " ");
        Self { kind, stage, message }
    }

    pub fn config(stage: &'static str, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Config, stage, message)
    }

    pub fn data(stage: &'static str, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Data, stage, message)
    }

    pub fn internal(stage: &'static str, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Internal, stage, message)
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.as_os_str().is_empty() || p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Cartesian product of named axes, in axis-name then value order.
fn product(axes: &BTreeMap<String, Vec<f64>>) -> HyperGrid {
    let mut points = vec![BTreeMap::new()];
    for (name, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p: BTreeMap<String, f64>| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), *v);
                    q
                })
            })
            .collect();
    }
    if axes.is_empty() {
        HyperGrid::default()
    } else {
        HyperGrid { points }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut c: Self = toml::from_str(text).map_err(|e| PipelineError::config("config", e.message()))?;
        c.rebase(base);
        Ok(c)
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.pairs,
            &mut self.concepts,
            &mut self.countries,
            &mut self.publishers,
            &mut self.output_dir,
        ] {
            *p = resolve(base, p);
        }
    }

    /// The replay file: this config with absolute paths.
    pub fn to_toml(&self) -> String {
        let mut c = self.clone();
        for p in [
            &mut c.pairs,
            &mut c.concepts,
            &mut c.countries,
            &mut c.publishers,
            &mut c.output_dir,
        ] {
            *p = absolute(p);
        }
        toml::to_string(&c).expect("config serializes")
    }

    pub fn barrier_kinds(&self) -> Result<Vec<BarrierKind>> {
        if self.barriers.is_empty() {
            return Ok(BarrierKind::ALL.to_vec());
        }
        let mut kinds = self
            .barriers
            .iter()
            .map(|b| b.parse::<BarrierKind>().map_err(|e| PipelineError::config("config", e)))
            .collect::<Result<Vec<_>>>()?;
        kinds.sort();
        kinds.dedup();
        Ok(kinds)
    }

    pub fn model_families(&self) -> Result<Vec<ModelFamily>> {
        if self.models.is_empty() {
            return Ok(ModelFamily::ALL.to_vec());
        }
        let mut families = self
            .models
            .iter()
            .map(|m| m.parse::<ModelFamily>().map_err(|e| PipelineError::config("config", e)))
            .collect::<Result<Vec<_>>>()?;
        families.sort();
        families.dedup();
        Ok(families)
    }

    /// Specs and grids for every configured model, each seeded from the
    /// run seed and its family.
    pub fn experiment_models(&self) -> Result<Vec<ExperimentModel>> {
        for slug in self.hyperparameters.keys().chain(self.grids.keys()) {
            slug.parse::<ModelFamily>()
                .map_err(|e| PipelineError::config("config", e))?;
        }
        fn lookup<'a, V>(map: &'a BTreeMap<String, V>, f: ModelFamily) -> Option<&'a V> {
            map.iter()
                .find(|(k, _)| k.parse::<ModelFamily>().ok() == Some(f))
                .map(|(_, v)| v)
        }
        self.model_families()?
            .into_iter()
            .map(|family| {
                let mut spec = ModelSpec::new(family, crate::rng::derive(self.seed, family as u64));
                if let Some(params) = lookup(&self.hyperparameters, family) {
                    for (name, value) in params {
                        spec = spec.with(name, *value);
                    }
                }
                spec.validate().map_err(|e| PipelineError::config("config", e))?;
                let grid = match lookup(&self.grids, family) {
                    Some(axes) => product(axes),
                    None => family.default_grid(),
                };
                for i in 0..grid.len() {
                    grid.apply(&spec, i)
                        .validate()
                        .map_err(|e| PipelineError::config("config", e))?;
                }
                Ok(ExperimentModel { spec, grid })
            })
            .collect()
    }

    pub fn profile_options(&self) -> Result<ProfileOptions> {
        let base = ProfileOptions {
            min_max_scale: self.min_max_scale,
            ..ProfileOptions::default()
        };
        if self.economic_indicators.is_empty() {
            Ok(base)
        } else {
            base.with_economic_names(&self.economic_indicators)
                .map_err(|e| PipelineError::config("config", e))
        }
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            k: self.folds,
            seed: self.seed,
            nested: self.nested,
            fold_mean: self.fold_mean,
        }
    }

    /// Checks everything that can be checked before reading data.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in self.inputs() {
            if p.as_os_str().is_empty() {
                return Err(PipelineError::config(name, "no path given"));
            }
            if !p.is_file() {
                return Err(PipelineError::config(name, format!("not found ({})", p.display())));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(PipelineError::config("output", "no directory given"));
        }
        if self.event.trim().is_empty() || self.event.contains(['/', '\\']) {
            return Err(PipelineError::config("config", "event must be a non-empty name without slashes"));
        }
        if self.vocabulary_size == 0 {
            return Err(PipelineError::config("config", "vocabulary_size must be at least 1"));
        }
        if !(self.threshold.is_finite() && (-1.0..=1.0).contains(&self.threshold)) {
            return Err(PipelineError::config("config", "threshold must be in [-1, 1]"));
        }
        if self.folds < 2 {
            return Err(PipelineError::config("config", "folds must be at least 2"));
        }
        self.barrier_kinds()?;
        self.experiment_models()?;
        self.profile_options()?;
        Ok(())
    }

    fn inputs(&self) -> [(&'static str, &Path); 4] {
        [
            ("pairs", &self.pairs),
            ("concepts", &self.concepts),
            ("countries", &self.countries),
            ("publishers", &self.publishers),
        ]
    }
}

/// Loaded inputs and the spreading examples derived from them.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub knowledge: KnowledgeBase,
    pub concepts: ConceptIndex,
    pub examples: Vec<SpreadingExample>,
    pub report: IngestReport,
}

pub fn ingest(config: &PipelineConfig) -> Result<Ingested> {
    let pairs = parse_pairs(&config.pairs).map_err(|e| PipelineError::data("pairs", e))?;
    let concepts = ConceptIndex::load(&config.concepts).map_err(|e| PipelineError::data("concepts", e))?;
    let countries = ProfileStore::load(&config.countries).map_err(|e| PipelineError::data("countries", e))?;
    let publishers =
        PublisherStore::load(&config.publishers, &countries).map_err(|e| PipelineError::data("publishers", e))?;
    let knowledge = KnowledgeBase::with_options(countries, publishers, config.profile_options()?)
        .map_err(|e| PipelineError::config("config", e))?;
    let (examples, report) = to_spreading_examples(&pairs, &concepts, knowledge.publishers(), &config.event);
    if examples.is_empty() {
        return Err(PipelineError::data("ingest", "no spreading examples survived ingest"));
    }
    Ok(Ingested {
        knowledge,
        concepts,
        examples,
        report,
    })
}

/// The feature vocabulary for a run.
pub fn vocabulary(config: &PipelineConfig, ingested: &Ingested) -> Result<ConceptVocabulary> {
    let vocab = if config.global_vocab {
        ConceptVocabulary::from_concept_sets(ingested.concepts.iter().map(|(_, c)| c), config.vocabulary_size)
    } else {
        build_vocabulary(&ingested.examples, config.vocabulary_size)
    };
    vocab.map_err(|e| PipelineError::data("features", e))
}

pub fn datasets(config: &PipelineConfig, ingested: &Ingested, vocab: &ConceptVocabulary) -> Result<Vec<BarrierDataset>> {
    let options = AnnotateOptions {
        threshold: config.threshold,
        profile_side: config.profile_side,
    };
    Ok(config
        .barrier_kinds()?
        .into_iter()
        .map(|kind| build_barrier_dataset(&ingested.examples, kind, &ingested.knowledge, vocab, &options))
        .collect())
}

pub fn dataset_file_name(event: &str, kind: BarrierKind) -> String {
    format!("{event}_{}.csv", kind.slug())
}

fn write_file(stage: &'static str, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

fn ingest_text(report: &IngestReport, datasets: &[BarrierDataset]) -> String {
    let mut s = report.render();
    for d in datasets {
        let (t, f) = d.class_counts();
        s.push_str(&format!(
            "{}: {} instances ({t} TRUE, {f} FALSE), {} dropped",
            d.barrier.slug(),
            d.len(),
            d.total_dropped()
        ));
        for (reason, n) in &d.dropped {
            s.push_str(&format!(", {reason} {n}"));
        }
        s.push('\n');
    }
    s
}

/// Ingest, annotate and features; writes vocabulary, datasets and the
/// ingest report.
pub fn prepare(config: &PipelineConfig) -> Result<(Ingested, ConceptVocabulary, Vec<BarrierDataset>)> {
    config.validate()?;
    let out = &config.output_dir;
    let datasets_dir = out.join(DATASETS_DIR);
    fs::create_dir_all(&datasets_dir)
        .map_err(|e| PipelineError::config("output", format!("{}: {e}", datasets_dir.display())))?;
    write_file("config", &out.join(CONFIG_FILE), config.to_toml())?;

    let ingested = ingest(config)?;
    let vocab = vocabulary(config, &ingested)?;
    let mut buf = Vec::new();
    vocab.write(&mut buf).map_err(|e| PipelineError::internal("features", e))?;
    write_file("features", &out.join(VOCABULARY_FILE), buf)?;

    let sets = datasets(config, &ingested, &vocab)?;
    for d in &sets {
        let path = datasets_dir.join(dataset_file_name(&config.event, d.barrier));
        save_dataset(d, &path).map_err(|e| PipelineError::data("annotate", e))?;
    }
    write_file("ingest", &out.join(INGEST_REPORT_FILE), ingest_text(&ingested.report, &sets))?;
    Ok((ingested, vocab, sets))
}

/// Cross-validates every model on every dataset.
pub fn evaluate(
    datasets: &[BarrierDataset],
    models: &[ExperimentModel],
    options: &ExperimentOptions,
) -> Result<ReportTable> {
    let mut rows = Vec::new();
    for d in datasets {
        let r = run_experiment(d, models, options).map_err(|e| match e {
            crate::eval::ExperimentError::Fold(f) => PipelineError::data("experiment", format!("{}: {f}", d.barrier.slug())),
            other => PipelineError::internal("experiment", format!("{}: {other}", d.barrier.slug())),
        })?;
        rows.extend(r);
    }
    Ok(ReportTable::new(rows, datasets.iter().map(DatasetSummary::of).collect()))
}

/// Writes report.md, report.csv and results.json into `dir`.
pub fn write_report(table: &ReportTable, dir: &Path) -> Result<()> {
    write_file("report", &dir.join(REPORT_MD_FILE), table.render(ReportFormat::Markdown))?;
    write_file("report", &dir.join(REPORT_CSV_FILE), table.render(ReportFormat::Csv))?;
    let json = serde_json::to_string_pretty(table).map_err(|e| PipelineError::internal("report", e))?;
    write_file("report", &dir.join(RESULTS_FILE), json)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ingest: IngestReport,
    pub vocabulary: ConceptVocabulary,
    pub datasets: Vec<BarrierDataset>,
    pub report: ReportTable,
}

/// The full pipeline.
pub fn run(config: &PipelineConfig) -> Result<RunOutcome> {
    let (ingested, vocabulary, datasets) = prepare(config)?;
    let report = evaluate(&datasets, &config.experiment_models()?, &config.experiment_options())?;
    write_report(&report, &config.output_dir)?;
    Ok(RunOutcome {
        ingest: ingested.report,
        vocabulary,
        datasets,
        report,
    })
}
