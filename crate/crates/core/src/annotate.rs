//! Barrier labels and per-barrier datasets.
//!
//! Label semantics: `true` means the barrier is present, i.e. source and
//! target publisher metadata differ for that barrier.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::barrier::BarrierKind;
use crate::features::{assemble_instance, ConceptVocabulary, FeatureError, LabeledInstance, ProfileSide};
use crate::ingest::SpreadingExample;
use crate::knowledge::{CountryProfile, KnowledgeBase, KnowledgeError, PublisherRecord};

/// Cosine similarity above which vector barriers are considered absent.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.9;

/// Coordinate tolerance, in degrees, for calling two locations the same.
pub const COORDINATE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotateError {
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("{0}")]
    IncompleteMetadata(String),
    #[error("{0} is not an equality barrier")]
    NotEqualityBarrier(BarrierKind),
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, AnnotateError> {
    if u.len() != v.len() {
        return Err(AnnotateError::LengthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(AnnotateError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// `false` iff similarity is strictly above `threshold`.
pub fn annotate_vector_barrier(a: &[f64], b: &[f64], threshold: f64) -> Result<bool, AnnotateError> {
    Ok(cosine_similarity(a, b)? <= threshold)
}

/// One side of a pair: the publisher and, when resolvable, its country.
#[derive(Debug, Clone, Copy)]
pub struct PublisherView<'a> {
    pub publisher: &'a PublisherRecord,
    pub country: Option<&'a CountryProfile>,
}

impl<'a> PublisherView<'a> {
    pub fn resolve(knowledge: &'a KnowledgeBase, publisher: &'a PublisherRecord) -> Self {
        Self {
            publisher,
            country: knowledge.country_of(publisher),
        }
    }

    fn country(&self) -> Result<&'a CountryProfile, AnnotateError> {
        self.country.ok_or_else(|| {
            AnnotateError::IncompleteMetadata(format!(
                "publisher `{}` has no country profile",
                self.publisher.publisher_uri
            ))
        })
    }

    fn alignment(&self) -> Result<&'a str, AnnotateError> {
        self.publisher.political_alignment.as_deref().ok_or_else(|| {
            AnnotateError::IncompleteMetadata(format!(
                "publisher `{}` has no political alignment",
                self.publisher.publisher_uri
            ))
        })
    }
}

/// Equality rule for geographical, time-zone and political barriers.
pub fn annotate_equality_barrier(
    source: PublisherView<'_>,
    target: PublisherView<'_>,
    kind: BarrierKind,
) -> Result<bool, AnnotateError> {
    match kind {
        BarrierKind::Geographical => {
            let (a, b) = (source.country()?, target.country()?);
            let same = a.country_code == b.country_code
                || ((a.latitude - b.latitude).abs() <= COORDINATE_EPSILON
                    && (a.longitude - b.longitude).abs() <= COORDINATE_EPSILON);
            Ok(!same)
        }
        BarrierKind::TimeZone => {
            let (a, b) = (source.country()?, target.country()?);
            Ok(a.utc_offset != b.utc_offset)
        }
        BarrierKind::Political => Ok(source.alignment()? != target.alignment()?),
        other => Err(AnnotateError::NotEqualityBarrier(other)),
    }
}

/// Why an example did not make it into a barrier dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DropReason {
    MissingPublisher,
    IncompleteMetadata,
    UnknownAlignment,
    ZeroProfile,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::MissingPublisher => "MissingPublisher",
            DropReason::IncompleteMetadata => "IncompleteMetadata",
            DropReason::UnknownAlignment => "UnknownAlignment",
            DropReason::ZeroProfile => "ZeroProfile",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierDataset {
    pub barrier: BarrierKind,
    pub instances: Vec<LabeledInstance>,
    /// Column names for the full feature vector.
    pub feature_names: Vec<String>,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl BarrierDataset {
    /// `(n_true, n_false)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let n_true = self.instances.iter().filter(|i| i.label).count();
        (n_true, self.instances.len() - n_true)
    }

    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn feature_len(&self) -> usize {
        self.feature_names.len()
    }
}

/// Knobs for dataset construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotateOptions {
    pub threshold: f64,
    pub profile_side: ProfileSide,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            profile_side: ProfileSide::Source,
        }
    }
}

/// Label for one example, or the reason it cannot be labeled.
pub fn label_example(
    example: &SpreadingExample,
    kind: BarrierKind,
    knowledge: &KnowledgeBase,
    threshold: f64,
) -> Result<bool, DropReason> {
    let source = knowledge
        .publisher(&example.source_publisher_uri)
        .ok_or(DropReason::MissingPublisher)?;
    let target = knowledge
        .publisher(&example.target_publisher_uri)
        .ok_or(DropReason::MissingPublisher)?;
    if kind.is_vector() {
        let a = knowledge.barrier_profile(source, kind).map_err(knowledge_drop)?;
        let b = knowledge.barrier_profile(target, kind).map_err(knowledge_drop)?;
        annotate_vector_barrier(&a, &b, threshold).map_err(|_| DropReason::ZeroProfile)
    } else {
        let result = annotate_equality_barrier(
            PublisherView::resolve(knowledge, source),
            PublisherView::resolve(knowledge, target),
            kind,
        );
        match result {
            Ok(label) => Ok(label),
            Err(_) if kind == BarrierKind::Political => Err(DropReason::UnknownAlignment),
            Err(_) => Err(DropReason::IncompleteMetadata),
        }
    }
}

fn knowledge_drop(e: KnowledgeError) -> DropReason {
    match e {
        KnowledgeError::UnknownAlignment(_) => DropReason::UnknownAlignment,
        _ => DropReason::IncompleteMetadata,
    }
}

fn feature_drop(e: FeatureError) -> DropReason {
    match e {
        FeatureError::Knowledge(k) => knowledge_drop(k),
        FeatureError::UnknownPublisher(_) => DropReason::MissingPublisher,
        _ => DropReason::IncompleteMetadata,
    }
}

/// Labels every example for `kind` and assembles its instance. Output order
/// follows input order.
pub fn build_barrier_dataset(
    examples: &[SpreadingExample],
    kind: BarrierKind,
    knowledge: &KnowledgeBase,
    vocab: &ConceptVocabulary,
    options: &AnnotateOptions,
) -> BarrierDataset {
    let outcomes: Vec<Result<LabeledInstance, DropReason>> = examples
        .par_iter()
        .map(|e| {
            let label = label_example(e, kind, knowledge, options.threshold)?;
            assemble_instance(e, kind, vocab, knowledge, options.profile_side, label).map_err(feature_drop)
        })
        .collect();

    let mut instances = Vec::with_capacity(outcomes.len());
    let mut dropped = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok(i) => instances.push(i),
            Err(r) => *dropped.entry(r).or_default() += 1,
        }
    }
    let mut feature_names = vocab.column_names();
    feature_names.extend(knowledge.profile_columns(kind));
    BarrierDataset {
        barrier: kind,
        instances,
        feature_names,
        dropped,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes `article_id,label,<features...>` with `TRUE`/`FALSE` labels.
pub fn write_dataset<W: Write>(dataset: &BarrierDataset, out: W) -> Result<(), DatasetFileError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["article_id".to_string(), "label".to_string()];
    header.extend(dataset.feature_names.iter().cloned());
    w.write_record(&header)?;
    for inst in &dataset.instances {
        let mut row = Vec::with_capacity(inst.features.len() + 2);
        row.push(inst.article_id.clone());
        row.push(if inst.label { "TRUE" } else { "FALSE" }.to_string());
        row.extend(inst.features.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn save_dataset(dataset: &BarrierDataset, path: impl AsRef<Path>) -> Result<(), DatasetFileError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DatasetFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

/// Infers the barrier from the profile columns that follow `c0..c{K-1}`.
pub fn infer_barrier(feature_names: &[String]) -> Option<BarrierKind> {
    let profile: Vec<&str> = feature_names
        .iter()
        .map(String::as_str)
        .filter(|n| !is_concept_column(n))
        .collect();
    let first = *profile.first()?;
    if first.starts_with("Political-Alignment:") {
        Some(BarrierKind::Political)
    } else if first == "Latitude" {
        Some(BarrierKind::Geographical)
    } else if first == "UTC-offset" {
        Some(BarrierKind::TimeZone)
    } else if crate::knowledge::CULTURAL_DIMENSIONS.contains(&first) {
        Some(BarrierKind::Cultural)
    } else if crate::knowledge::ECONOMIC_INDICATORS.contains(&first) {
        Some(BarrierKind::Economic)
    } else {
        None
    }
}

fn is_concept_column(name: &str) -> bool {
    name.strip_prefix('c')
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Reads a dataset file written by [`write_dataset`]. Drop counts are not
/// stored in the file and come back empty.
pub fn read_dataset<R: Read>(rdr: R, barrier: Option<BarrierKind>) -> Result<BarrierDataset, DatasetFileError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(rdr);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "article_id" || &headers[1] != "label" {
        return Err(DatasetFileError::Malformed {
            row: 0,
            reason: "header must start with `article_id,label`".into(),
        });
    }
    let feature_names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let barrier = match barrier.or_else(|| infer_barrier(&feature_names)) {
        Some(b) => b,
        None => {
            return Err(DatasetFileError::Malformed {
                row: 0,
                reason: "cannot infer barrier from columns".into(),
            })
        }
    };
    let mut instances = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let label = match &rec[1] {
            "TRUE" => true,
            "FALSE" => false,
            other => {
                return Err(DatasetFileError::Malformed {
                    row,
                    reason: format!("label `{other}` is neither TRUE nor FALSE"),
                })
            }
        };
        let features = rec
            .iter()
            .skip(2)
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(DatasetFileError::Malformed {
                    row,
                    reason: format!("feature `{f}` is not a finite number"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        instances.push(LabeledInstance {
            article_id: rec[0].to_string(),
            barrier,
            features,
            label,
        });
    }
    Ok(BarrierDataset {
        barrier,
        instances,
        feature_names,
        dropped: BTreeMap::new(),
    })
}

pub fn load_dataset(path: impl AsRef<Path>, barrier: Option<BarrierKind>) -> Result<BarrierDataset, DatasetFileError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(std::io::BufReader::new(file), barrier)
}
