//! Concept vocabulary and per-barrier feature assembly.
//!
//! An instance is the binary concept block followed by the barrier's profile
//! block of one publisher.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierKind;
use crate::ingest::SpreadingExample;
use crate::knowledge::{KnowledgeBase, KnowledgeError};

pub const DEFAULT_VOCABULARY_SIZE: usize = 300;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("no concepts in corpus")]
    EmptyCorpus,
    #[error("vocabulary size must be at least 1")]
    ZeroSize,
    #[error("unknown publisher `{0}`")]
    UnknownPublisher(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
}

/// Concepts ranked by document frequency, ties broken by identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptVocabulary {
    entries: Vec<(String, u64)>,
    positions: HashMap<String, usize>,
}

impl ConceptVocabulary {
    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let positions = entries
            .iter()
            .enumerate()
            .map(|(i, (c, _))| (c.clone(), i))
            .collect();
        Self { entries, positions }
    }

    /// Top `k` concepts over the given concept sets.
    pub fn from_concept_sets<'a>(
        sets: impl IntoIterator<Item = &'a BTreeSet<String>>,
        k: usize,
    ) -> Result<Self, FeatureError> {
        if k == 0 {
            return Err(FeatureError::ZeroSize);
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for set in sets {
            for c in set {
                *freq.entry(c.as_str()).or_default() += 1;
            }
        }
        if freq.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(k);
        Ok(Self::from_entries(
            ranked.into_iter().map(|(c, n)| (c.to_string(), n)).collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn position(&self, concept: &str) -> Option<usize> {
        self.positions.get(concept).copied()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file)
    }

    /// Reads the two-column `concept,frequency` file in rank order.
    pub fn from_reader<R: Read>(rdr: R) -> Result<Self, FeatureError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(rdr);
        let headers = reader.headers().map_err(|e| FeatureError::MalformedRow {
            row: 0,
            reason: e.to_string(),
        })?;
        if headers.iter().collect::<Vec<_>>() != ["concept", "frequency"] {
            return Err(FeatureError::MalformedRow {
                row: 0,
                reason: "header must be `concept,frequency`".into(),
            });
        }
        let mut entries: Vec<(String, u64)> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| FeatureError::MalformedRow {
                row,
                reason: e.to_string(),
            })?;
            let freq: u64 = rec[1].parse().map_err(|_| FeatureError::MalformedRow {
                row,
                reason: format!("frequency `{}` is not a count", &rec[1]),
            })?;
            let concept = rec[0].to_string();
            if let Some((prev, prev_freq)) = entries.last() {
                if freq > *prev_freq || (freq == *prev_freq && concept <= *prev) {
                    return Err(FeatureError::MalformedRow {
                        row,
                        reason: "rows are not in rank order".into(),
                    });
                }
            }
            entries.push((concept, freq));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["concept", "frequency"])?;
        for (c, n) in &self.entries {
            w.write_record([c.as_str(), &n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Feature column names `c0..c{K-1}`.
    pub fn column_names(&self) -> Vec<String> {
        (0..self.len()).map(|i| format!("c{i}")).collect()
    }
}

/// Vocabulary of the `k` most frequent concepts across `examples`.
///
/// Frequency counts each example once per concept.
pub fn build_vocabulary(examples: &[SpreadingExample], k: usize) -> Result<ConceptVocabulary, FeatureError> {
    ConceptVocabulary::from_concept_sets(examples.iter().map(|e| &e.concepts), k)
}

/// Binary presence vector over the vocabulary.
pub fn vectorize_concepts(example: &SpreadingExample, vocab: &ConceptVocabulary) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    for c in &example.concepts {
        if let Some(i) = vocab.position(c) {
            v[i] = 1.0;
        }
    }
    v
}

/// Which publisher's profile fills the profile block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSide {
    #[default]
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub article_id: String,
    pub barrier: BarrierKind,
    pub features: Vec<f64>,
    /// `true` means the barrier is present.
    pub label: bool,
}

pub fn assemble_instance(
    example: &SpreadingExample,
    kind: BarrierKind,
    vocab: &ConceptVocabulary,
    knowledge: &KnowledgeBase,
    side: ProfileSide,
    label: bool,
) -> Result<LabeledInstance, FeatureError> {
    let uri = match side {
        ProfileSide::Source => &example.source_publisher_uri,
        ProfileSide::Target => &example.target_publisher_uri,
    };
    let publisher = knowledge
        .publisher(uri)
        .ok_or_else(|| FeatureError::UnknownPublisher(uri.clone()))?;
    let mut features = vectorize_concepts(example, vocab);
    features.extend(knowledge.barrier_profile(publisher, kind)?);
    Ok(LabeledInstance {
        article_id: example.article_id.clone(),
        barrier: kind,
        features,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::tests::fixture;
    use proptest::prelude::*;

    fn example(id: &str, concepts: &[&str]) -> SpreadingExample {
        SpreadingExample {
            article_id: id.into(),
            source_publisher_uri: "news.sky.com".into(),
            target_publisher_uri: "derstandard.at".into(),
            event_label: "earthquake".into(),
            concepts: concepts.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Brute force: count articles per concept by scanning every article.
    fn brute_force_top(examples: &[SpreadingExample], k: usize) -> Vec<(String, u64)> {
        let mut all: Vec<String> = examples.iter().flat_map(|e| e.concepts.iter().cloned()).collect();
        all.sort();
        all.dedup();
        let mut counted: Vec<(String, u64)> = all
            .into_iter()
            .map(|c| {
                let n = examples.iter().filter(|e| e.concepts.contains(&c)).count() as u64;
                (c, n)
            })
            .collect();
        // stable sort keeps lexicographic order within a frequency
        counted.sort_by(|a, b| b.1.cmp(&a.1));
        counted.truncate(k);
        counted
    }

    #[test]
    fn top_two_with_lexicographic_tie_break() {
        let corpus = [example("a", &["X", "Y"]), example("b", &["X"]), example("c", &["X", "Z"])];
        let vocab = build_vocabulary(&corpus, 2).unwrap();
        let expected = vec![("X".to_string(), 3), ("Y".to_string(), 1)];
        assert_eq!(brute_force_top(&corpus, 2), expected);
        assert_eq!(vocab.entries(), expected.as_slice());
    }

    #[test]
    fn saturates_and_rejects_degenerate_inputs() {
        let corpus = [example("a", &["X", "Y"]), example("b", &["Z"])];
        assert_eq!(build_vocabulary(&corpus, 300).unwrap().len(), 3);
        assert!(matches!(build_vocabulary(&corpus, 0), Err(FeatureError::ZeroSize)));
        assert!(matches!(build_vocabulary(&[], 5), Err(FeatureError::EmptyCorpus)));
        assert!(matches!(
            build_vocabulary(&[example("a", &[])], 5),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn vectorizes_by_membership() {
        let corpus = [example("a", &["X"]), example("b", &["X", "Y"]), example("c", &["X", "Y", "Z"])];
        let vocab = build_vocabulary(&corpus, 3).unwrap();
        assert_eq!(vocab.entries()[2].0, "Z");
        assert_eq!(vectorize_concepts(&example("d", &["Z", "X"]), &vocab), vec![1.0, 0.0, 1.0]);
        assert_eq!(vectorize_concepts(&example("e", &["X", "Y", "Z"]), &vocab), vec![1.0; 3]);
        assert_eq!(vectorize_concepts(&example("f", &["Q"]), &vocab), vec![0.0; 3]);
    }

    #[test]
    fn assembles_concept_then_profile_block() {
        let kb = fixture();
        let corpus = [example("a", &["X"]), example("b", &["X", "Y"]), example("c", &["X", "Y", "Z"])];
        let vocab = build_vocabulary(&corpus, 3).unwrap();
        let e = example("d", &["X", "Z"]);
        let inst = assemble_instance(&e, BarrierKind::TimeZone, &vocab, &kb, ProfileSide::Source, true).unwrap();
        assert_eq!(inst.features, vec![1.0, 0.0, 1.0, 0.0]);
        assert!(inst.label);

        let econ = assemble_instance(&e, BarrierKind::Economic, &vocab, &kb, ProfileSide::Source, false).unwrap();
        assert_eq!(econ.features.len(), 3 + 13);

        // the Sky News source has no alignment
        assert!(matches!(
            assemble_instance(&e, BarrierKind::Political, &vocab, &kb, ProfileSide::Source, false),
            Err(FeatureError::Knowledge(KnowledgeError::UnknownAlignment(_)))
        ));
        let target = assemble_instance(&e, BarrierKind::Political, &vocab, &kb, ProfileSide::Target, false).unwrap();
        assert_eq!(&target.features[3..], &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let corpus = [example("a", &["X", "Y"]), example("b", &["X", "Q,uoted"])];
        let vocab = build_vocabulary(&corpus, 10).unwrap();
        let mut buf = Vec::new();
        vocab.write(&mut buf).unwrap();
        let again = ConceptVocabulary::from_reader(buf.as_slice()).unwrap();
        assert_eq!(again, vocab);
        assert_eq!(again.position("Y"), vocab.position("Y"));

        let unordered = "concept,frequency\nA,1\nB,2\n";
        assert!(ConceptVocabulary::from_reader(unordered.as_bytes()).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<SpreadingExample>> {
        proptest::collection::vec(
            proptest::collection::btree_set("[a-f]{1,2}", 1..6),
            1..25,
        )
        .prop_map(|sets| {
            sets.into_iter()
                .enumerate()
                .map(|(i, s)| SpreadingExample {
                    article_id: format!("a{i}"),
                    source_publisher_uri: "s".into(),
                    target_publisher_uri: "t".into(),
                    event_label: "e".into(),
                    concepts: s,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn vocabulary_matches_brute_force(corpus in arb_corpus(), k in 1usize..40) {
            let vocab = build_vocabulary(&corpus, k).unwrap();
            let expected = brute_force_top(&corpus, k);
            prop_assert_eq!(vocab.entries(), expected.as_slice());
        }

        #[test]
        fn vocabulary_is_permutation_invariant(corpus in arb_corpus(), k in 1usize..20, rot in 0usize..25) {
            let mut shuffled = corpus.clone();
            let n = shuffled.len();
            shuffled.rotate_left(rot % n);
            shuffled.reverse();
            prop_assert_eq!(build_vocabulary(&corpus, k).unwrap(), build_vocabulary(&shuffled, k).unwrap());
        }

        #[test]
        fn out_of_vocabulary_concepts_do_not_matter(corpus in arb_corpus(), extra in proptest::collection::btree_set("[x-z]{3}", 0..5)) {
            let vocab = build_vocabulary(&corpus, 10).unwrap();
            let mut e = corpus[0].clone();
            let before = vectorize_concepts(&e, &vocab);
            e.concepts.extend(extra);
            prop_assert_eq!(vectorize_concepts(&e, &vocab), before);
        }
    }
}
