//! Detection of news-spreading barriers from publisher profiles.
//!
//! The pipeline turns propagated article pairs into one labeled dataset per
//! barrier (economic, cultural, geographical, time zone, political), builds
//! bag-of-concepts plus publisher-profile features, and evaluates a suite of
//! classifiers against dummy baselines with stratified cross-validation.

pub mod annotate;
pub mod barrier;
pub mod classifiers;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod knowledge;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use annotate::{BarrierDataset, DropReason};
pub use barrier::BarrierKind;
pub use features::{ConceptVocabulary, LabeledInstance};
pub use ingest::{ArticlePair, ConceptIndex, SpreadingExample};
pub use knowledge::{KnowledgeBase, ProfileStore, PublisherStore};
