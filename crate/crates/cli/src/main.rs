//! `barrier`: command-line runner for the barrier detection pipeline.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
//! error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use barrier_core::annotate::load_dataset;
use barrier_core::classifiers::{train, ModelFamily, ModelSpec};
use barrier_core::eval::{ExperimentModel, ExperimentOptions, ReportFormat, ReportTable};
use barrier_core::features::ProfileSide;
use barrier_core::pipeline::{self, ErrorKind, PipelineConfig, PipelineError};
use barrier_core::synth::{generate, SyntheticSpec};
use barrier_core::BarrierKind;

/// Default run directory when neither a flag nor the config sets one.
const OUTPUT_DIR_ENV: &str = "BARRIER_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "barrier", version, about = "Detect news-spreading barriers from publisher metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, annotate, build features, cross-validate and write the report.
    Run(ConfigArgs),
    /// Generate a synthetic corpus with planted labels.
    Synth(SynthArgs),
    /// Print the most frequent concepts over the spreading examples.
    ConceptFreq {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of concepts to list.
        #[arg(short = 'n', long, default_value_t = 300)]
        top: usize,
    },
    /// Ingest and annotate only; writes per-barrier dataset files.
    Annotate(ConfigArgs),
    /// Fit one model on a dataset file and save it as JSON.
    Train(TrainArgs),
    /// Cross-validate models on existing dataset files.
    Evaluate(EvaluateArgs),
    /// Render a saved results.json as markdown or csv.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Source,
    Target,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    event: Option<String>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long)]
    countries: Option<PathBuf>,
    #[arg(long)]
    publishers: Option<PathBuf>,
    /// Run directory [default: $BARRIER_OUTPUT_DIR, else ./results]
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated barrier names.
    #[arg(long, value_delimiter = ',')]
    barriers: Vec<String>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Vocabulary size K.
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Cosine threshold for vector barriers.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    global_vocab: bool,
    #[arg(long)]
    nested: bool,
    #[arg(long)]
    fold_mean: bool,
    #[arg(long, value_enum)]
    profile_side: Option<Side>,
    /// Comma-separated economic indicator names.
    #[arg(long, value_delimiter = ',')]
    economic_indicators: Vec<String>,
    #[arg(long)]
    min_max_scale: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to write the corpus into.
    #[arg(long)]
    out: PathBuf,
    /// TOML generator spec; flags override its values.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n_examples: Option<usize>,
    #[arg(long)]
    n_other_pairs: Option<usize>,
    #[arg(long)]
    n_countries: Option<usize>,
    #[arg(long)]
    n_publishers: Option<usize>,
    #[arg(long)]
    economic_clusters: Option<usize>,
    #[arg(long)]
    cultural_clusters: Option<usize>,
    #[arg(long)]
    utc_groups: Option<usize>,
    #[arg(long)]
    cross_country_only: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Barrier of the dataset; inferred from its columns when omitted.
    #[arg(long)]
    barrier: Option<String>,
    #[arg(long)]
    model: String,
    /// Hyperparameter as name=value; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset files to evaluate; repeatable.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    /// Comma-separated model names [default: all]
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nested: bool,
    #[arg(long)]
    fold_mean: bool,
    /// Directory for report.md, report.csv and results.json [default: $BARRIER_OUTPUT_DIR, else ./results]
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// results.json written by `run` or `evaluate`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_param(raw: &str) -> Result<(String, f64), String> {
    let (name, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{raw}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut PathBuf, flag: &Option<PathBuf>| {
            if let Some(p) = flag {
                *slot = p.clone();
            }
        };
        set(&mut c.pairs, &self.pairs);
        set(&mut c.concepts, &self.concepts);
        set(&mut c.countries, &self.countries);
        set(&mut c.publishers, &self.publishers);
        set(&mut c.output_dir, &self.output_dir);
        if c.output_dir.as_os_str().is_empty() {
            c.output_dir = default_output_dir();
        }
        if let Some(e) = &self.event {
            c.event = e.clone();
        }
        if !self.barriers.is_empty() {
            c.barriers = self.barriers.clone();
        }
        if !self.models.is_empty() {
            c.models = self.models.clone();
        }
        if !self.economic_indicators.is_empty() {
            c.economic_indicators = self.economic_indicators.clone();
        }
        c.vocabulary_size = self.vocab_size.unwrap_or(c.vocabulary_size);
        c.threshold = self.threshold.unwrap_or(c.threshold);
        c.folds = self.folds.unwrap_or(c.folds);
        c.seed = self.seed.unwrap_or(c.seed);
        c.global_vocab |= self.global_vocab;
        c.nested |= self.nested;
        c.fold_mean |= self.fold_mean;
        c.min_max_scale |= self.min_max_scale;
        if let Some(side) = self.profile_side {
            c.profile_side = match side {
                Side::Source => ProfileSide::Source,
                Side::Target => ProfileSide::Target,
            };
        }
        Ok(c)
    }
}

fn io_error(stage: &'static str, path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::data(stage, format!("{}: {e}", path.display()))
}

fn print(text: &str) -> Result<(), PipelineError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => Ok(()),
        // a closed pipe is not worth an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(PipelineError::internal("output", e)),
    }
}

fn cmd_run(args: &ConfigArgs) -> Result<(), PipelineError> {
    let config = args.resolve()?;
    let outcome = pipeline::run(&config)?;
    print(&outcome.report.render(ReportFormat::Markdown))?;
    eprintln!("wrote {}", config.output_dir.display());
    Ok(())
}

fn cmd_annotate(args: &ConfigArgs) -> Result<(), PipelineError> {
    let config = args.resolve()?;
    let (ingested, _, datasets) = pipeline::prepare(&config)?;
    let mut s = format!("{} spreading examples\n", ingested.examples.len());
    for d in &datasets {
        let (t, f) = d.class_counts();
        s.push_str(&format!(
            "{}: {} instances ({t} TRUE, {f} FALSE), {} dropped\n",
            d.barrier.display_name(),
            d.len(),
            d.total_dropped()
        ));
    }
    print(&s)
}

fn cmd_concept_freq(args: &ConfigArgs, top: usize) -> Result<(), PipelineError> {
    let mut config = args.resolve()?;
    if top == 0 {
        return Err(PipelineError::config("concept-freq", "n must be at least 1"));
    }
    config.vocabulary_size = top;
    // only the inputs matter here; nothing is written
    for (name, p) in [
        ("pairs", &config.pairs),
        ("concepts", &config.concepts),
        ("countries", &config.countries),
        ("publishers", &config.publishers),
    ] {
        if !p.is_file() {
            return Err(PipelineError::config(name, format!("not found ({})", p.display())));
        }
    }
    let ingested = pipeline::ingest(&config)?;
    let vocab = pipeline::vocabulary(&config, &ingested)?;
    let mut s = String::from("rank\tconcept\tfrequency\n");
    for (i, (concept, n)) in vocab.entries().iter().enumerate() {
        s.push_str(&format!("{}\t{concept}\t{n}\n", i + 1));
    }
    print(&s)
}

fn cmd_synth(args: &SynthArgs) -> Result<(), PipelineError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| PipelineError::config("synth", format!("{}: {e}", path.display())))?;
            toml::from_str::<SyntheticSpec>(&text).map_err(|e| PipelineError::config("synth", e.message()))?
        }
        None => SyntheticSpec::default(),
    };
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut spec.n_examples, args.n_examples);
    set(&mut spec.n_other_pairs, args.n_other_pairs);
    set(&mut spec.n_countries, args.n_countries);
    set(&mut spec.n_publishers, args.n_publishers);
    set(&mut spec.economic_clusters, args.economic_clusters);
    set(&mut spec.cultural_clusters, args.cultural_clusters);
    set(&mut spec.utc_groups, args.utc_groups);
    if args.cross_country_only {
        spec.cross_country_only = true;
        spec.same_publisher_rate = 0.0;
    }
    spec.seed = args.seed.unwrap_or(spec.seed);
    let corpus = generate(&spec).map_err(|e| PipelineError::config("synth", e))?;
    corpus
        .write_to(&args.out)
        .map_err(|e| PipelineError::data("synth", e))?;
    print(&format!(
        "wrote {} pairs ({} spreading examples) to {}\n",
        corpus.pairs.len(),
        corpus.truth.len(),
        args.out.display()
    ))
}

fn parse_barrier(raw: &Option<String>) -> Result<Option<BarrierKind>, PipelineError> {
    raw.as_deref()
        .map(|b| b.parse::<BarrierKind>().map_err(|e| PipelineError::config("dataset", e)))
        .transpose()
}

fn cmd_train(args: &TrainArgs) -> Result<(), PipelineError> {
    let family: ModelFamily = args
        .model
        .parse()
        .map_err(|e| PipelineError::config("train", e))?;
    let mut spec = ModelSpec::new(family, args.seed);
    for (name, value) in &args.params {
        spec = spec.with(name, *value);
    }
    spec.validate().map_err(|e| PipelineError::config("train", e))?;
    let dataset = load_dataset(&args.dataset, parse_barrier(&args.barrier)?)
        .map_err(|e| io_error("dataset", &args.dataset, e))?;
    let model = train(&spec, &dataset.instances).map_err(|e| PipelineError::data("train", e))?;
    model
        .save(&args.out)
        .map_err(|e| PipelineError::data("train", e))?;
    print(&format!(
        "trained {} on {} instances of {}\n",
        family.display_name(),
        dataset.len(),
        dataset.barrier.display_name()
    ))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), PipelineError> {
    let config = PipelineConfig {
        models: args.models.clone(),
        seed: args.seed,
        ..PipelineConfig::default()
    };
    let models: Vec<ExperimentModel> = config.experiment_models()?;
    let options = ExperimentOptions {
        k: args.folds,
        seed: args.seed,
        nested: args.nested,
        fold_mean: args.fold_mean,
    };
    if args.folds < 2 {
        return Err(PipelineError::config("evaluate", "folds must be at least 2"));
    }
    let mut datasets = Vec::new();
    let mut seen = BTreeMap::new();
    for path in &args.datasets {
        let d = load_dataset(path, None).map_err(|e| io_error("dataset", path, e))?;
        if let Some(other) = seen.insert(d.barrier, path.clone()) {
            return Err(PipelineError::config(
                "evaluate",
                format!("{} and {} hold the same barrier", other.display(), path.display()),
            ));
        }
        datasets.push(d);
    }
    let table = pipeline::evaluate(&datasets, &models, &options)?;
    let dir = args.output_dir.clone().unwrap_or_else(default_output_dir);
    fs::create_dir_all(&dir).map_err(|e| io_error("output", &dir, e))?;
    pipeline::write_report(&table, &dir)?;
    print(&table.render(ReportFormat::Markdown))
}

fn cmd_report(args: &ReportArgs) -> Result<(), PipelineError> {
    let text = fs::read_to_string(&args.results).map_err(|e| io_error("report", &args.results, e))?;
    let table: ReportTable = serde_json::from_str(&text).map_err(|e| io_error("report", &args.results, e))?;
    if table.rows.is_empty() {
        return Err(PipelineError::data("report", "results hold no rows"));
    }
    let format = match args.format {
        Format::Markdown => ReportFormat::Markdown,
        Format::Csv => ReportFormat::Csv,
    };
    let rendered = table.render(format);
    match &args.out {
        Some(path) => fs::write(path, rendered).map_err(|e| io_error("report", path, e)),
        None => print(&rendered),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ErrorKind::Config.exit_code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::ConceptFreq { config, top } => cmd_concept_freq(config, *top),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
