//! Pair-file parsing and restructuring into spreading examples.
//!
//! A pair file row says that article `from` was compared with article `to`
//! and how similar they turned out. Only propagated pairs matter here; each
//! one becomes a [`SpreadingExample`] keyed by the `from` article, which is
//! the article that spread the information.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::knowledge::PublisherStore;

pub const PAIR_COLUMNS: [&str; 8] = [
    "from",
    "to",
    "weight",
    "Class",
    "from-publisher",
    "to-publisher",
    "from-pub-uri",
    "to-pub-uri",
];

/// Similarity at or above which a pair counts as propagated.
pub const PROPAGATED_MIN_WEIGHT: f64 = 0.7;
/// Similarity below which a pair counts as not propagated.
pub const NOT_PROPAGATED_MAX_WEIGHT: f64 = 0.4;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: unknown class label `{label}`")]
    UnknownClassLabel { row: usize, label: String },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagationClass {
    InformationPropagated,
    Unsure,
    InformationNotPropagated,
}

impl PropagationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PropagationClass::InformationPropagated => "Information-Propagated",
            PropagationClass::Unsure => "Unsure",
            PropagationClass::InformationNotPropagated => "Information-Not-Propagated",
        }
    }

    /// Case-insensitive; accepts the dataset's hyphenated spellings.
    pub fn parse(raw: &str) -> Option<Self> {
        let key: String = raw
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "informationpropagated" => Some(Self::InformationPropagated),
            "unsure" => Some(Self::Unsure),
            "informationnotpropagated" => Some(Self::InformationNotPropagated),
            _ => None,
        }
    }

    /// Whether `weight` agrees with the thresholds that define the class.
    pub fn consistent_with(self, weight: f64) -> bool {
        match self {
            Self::InformationPropagated => weight >= PROPAGATED_MIN_WEIGHT,
            Self::InformationNotPropagated => weight < NOT_PROPAGATED_MAX_WEIGHT,
            Self::Unsure => (NOT_PROPAGATED_MAX_WEIGHT..PROPAGATED_MIN_WEIGHT).contains(&weight),
        }
    }
}

impl fmt::Display for PropagationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticlePair {
    pub from_id: String,
    pub to_id: String,
    pub weight: f64,
    pub propagation_class: PropagationClass,
    pub from_publisher: String,
    pub to_publisher: String,
    pub from_publisher_uri: String,
    pub to_publisher_uri: String,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_pairs(path: impl AsRef<Path>) -> Result<Vec<ArticlePair>> {
    parse_pairs_from_reader(open(path.as_ref())?)
}

/// Parses a pair file. The header must name the eight pair columns in order.
pub fn parse_pairs_from_reader<R: Read>(rdr: R) -> Result<Vec<ArticlePair>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(rdr);
    let headers = reader.headers().map_err(|e| IngestError::MalformedRow {
        row: 0,
        reason: e.to_string(),
    })?;
    if headers.len() != PAIR_COLUMNS.len()
        || !headers
            .iter()
            .zip(PAIR_COLUMNS)
            .all(|(h, want)| h.eq_ignore_ascii_case(want))
    {
        return Err(IngestError::MalformedRow {
            row: 0,
            reason: format!("header must be `{}`", PAIR_COLUMNS.join(",")),
        });
    }

    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let weight: f64 = record[2].parse().map_err(|_| IngestError::MalformedRow {
            row,
            reason: format!("weight `{}` is not a number", &record[2]),
        })?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(IngestError::MalformedRow {
                row,
                reason: format!("weight {weight} outside [0, 1]"),
            });
        }
        let propagation_class =
            PropagationClass::parse(&record[3]).ok_or_else(|| IngestError::UnknownClassLabel {
                row,
                label: record[3].to_string(),
            })?;
        if record[0].is_empty() {
            return Err(IngestError::MalformedRow {
                row,
                reason: "empty article id".into(),
            });
        }
        pairs.push(ArticlePair {
            from_id: record[0].to_string(),
            to_id: record[1].to_string(),
            weight,
            propagation_class,
            from_publisher: record[4].to_string(),
            to_publisher: record[5].to_string(),
            from_publisher_uri: record[6].to_string(),
            to_publisher_uri: record[7].to_string(),
        });
    }
    Ok(pairs)
}

pub fn write_pairs<W: Write>(pairs: &[ArticlePair], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIR_COLUMNS)?;
    for p in pairs {
        w.write_record([
            p.from_id.as_str(),
            p.to_id.as_str(),
            &p.weight.to_string(),
            p.propagation_class.as_str(),
            p.from_publisher.as_str(),
            p.to_publisher.as_str(),
            p.from_publisher_uri.as_str(),
            p.to_publisher_uri.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Keeps propagated pairs in their original order.
pub fn filter_propagated(pairs: &[ArticlePair]) -> Vec<ArticlePair> {
    pairs
        .iter()
        .filter(|p| p.propagation_class == PropagationClass::InformationPropagated)
        .cloned()
        .collect()
}

/// Article id to its set of concept identifiers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptIndex {
    by_article: HashMap<String, BTreeSet<String>>,
}

#[derive(Deserialize)]
struct ConceptLine {
    article: String,
    concepts: Vec<String>,
}

impl ConceptIndex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    /// One JSON object per line: `{"article": "...", "concepts": [...]}`.
    /// Blank lines are skipped; repeated articles merge by union.
    pub fn from_reader<R: Read>(rdr: R) -> Result<Self> {
        let mut index = Self::default();
        for (i, line) in BufReader::new(rdr).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| IngestError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ConceptLine =
                serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            index.insert(parsed.article, parsed.concepts);
        }
        Ok(index)
    }

    pub fn insert(&mut self, article: impl Into<String>, concepts: impl IntoIterator<Item = String>) {
        self.by_article.entry(article.into()).or_default().extend(concepts);
    }

    pub fn get(&self, article: &str) -> Option<&BTreeSet<String>> {
        self.by_article.get(article)
    }

    pub fn len(&self) -> usize {
        self.by_article.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_article.is_empty()
    }

    /// Concept sets in article-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        let mut entries: Vec<_> = self.by_article.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries.into_iter()
    }

    /// JSONL in article-id order, one object per article.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (article, concepts) in self.iter() {
            let line = serde_json::json!({ "article": article, "concepts": concepts });
            writeln!(out, "{line}")?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadingExample {
    pub article_id: String,
    pub source_publisher_uri: String,
    pub target_publisher_uri: String,
    pub event_label: String,
    pub concepts: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IngestDrop {
    MissingPublisher,
    MissingConcepts,
}

impl fmt::Display for IngestDrop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IngestDrop::MissingPublisher => "MissingPublisher",
            IngestDrop::MissingConcepts => "MissingConcepts",
        })
    }
}

/// Accounting for one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub event_label: String,
    pub total_pairs: usize,
    pub propagated_pairs: usize,
    pub examples: usize,
    pub unique_articles: usize,
    /// Pairs whose weight disagrees with their class thresholds.
    pub class_weight_inconsistencies: usize,
    pub drops: BTreeMap<IngestDrop, usize>,
}

impl IngestReport {
    pub fn total_drops(&self) -> usize {
        self.drops.values().sum()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("event: {}\n", self.event_label));
        s.push_str(&format!("pairs: {}\n", self.total_pairs));
        s.push_str(&format!("propagated pairs: {}\n", self.propagated_pairs));
        s.push_str(&format!(
            "class/weight inconsistencies: {}\n",
            self.class_weight_inconsistencies
        ));
        s.push_str(&format!("examples: {}\n", self.examples));
        s.push_str(&format!("unique source articles: {}\n", self.unique_articles));
        s.push_str(&format!("dropped: {}\n", self.total_drops()));
        for (reason, n) in &self.drops {
            s.push_str(&format!("  {reason}: {n}\n"));
        }
        s
    }
}

/// Counts pairs whose weight contradicts their class.
pub fn count_inconsistent(pairs: &[ArticlePair]) -> usize {
    pairs
        .iter()
        .filter(|p| !p.propagation_class.consistent_with(p.weight))
        .count()
}

/// Turns the propagated pairs among `pairs` into examples keyed by the
/// `from` article; other pairs are skipped.
///
/// Pairs with an unknown publisher on either side, or whose source article
/// has no concepts, are dropped and tallied.
pub fn to_spreading_examples(
    pairs: &[ArticlePair],
    concepts: &ConceptIndex,
    publishers: &PublisherStore,
    event_label: &str,
) -> (Vec<SpreadingExample>, IngestReport) {
    let propagated = filter_propagated(pairs);
    let mut report = IngestReport {
        event_label: event_label.to_string(),
        total_pairs: pairs.len(),
        propagated_pairs: propagated.len(),
        class_weight_inconsistencies: count_inconsistent(pairs),
        ..IngestReport::default()
    };
    let mut examples = Vec::with_capacity(propagated.len());
    for pair in &propagated {
        let source = publishers.get(&pair.from_publisher_uri);
        let target = publishers.get(&pair.to_publisher_uri);
        let (Some(source), Some(target)) = (source, target) else {
            *report.drops.entry(IngestDrop::MissingPublisher).or_default() += 1;
            continue;
        };
        let Some(article_concepts) = concepts.get(&pair.from_id).filter(|c| !c.is_empty()) else {
            *report.drops.entry(IngestDrop::MissingConcepts).or_default() += 1;
            continue;
        };
        examples.push(SpreadingExample {
            article_id: pair.from_id.clone(),
            source_publisher_uri: source.publisher_uri.clone(),
            target_publisher_uri: target.publisher_uri.clone(),
            event_label: event_label.to_string(),
            concepts: article_concepts.clone(),
        });
    }
    report.examples = examples.len();
    report.unique_articles = examples
        .iter()
        .map(|e| e.article_id.as_str())
        .collect::<HashSet<_>>()
        .len();
    (examples, report)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::knowledge::tests::COUNTRIES_CSV;
    use crate::knowledge::ProfileStore;
    use proptest::prelude::*;

    pub(crate) const TABLE_PAIRS: &str = "\
from,to,weight,Class,from-publisher,to-publisher,from-pub-uri,to-pub-uri
Por44, Por43, 0.627, Unsure, ClicRBS, SAPO 24, jornald.clicrbs.com.br, 24.sapo.pt
English881, English880, 1, Information-Propagated, Sky News, 247 Wall St., news.sky.com, 247wallst.com
English258, English329, 0.313, Information-Not-Propagated, Sify, 4-traders, sify.com, 4-traders.com
English793, English787, 0.238, Information-Not-Propagated, Bioengineer.org, 7NEWS Sydney, scienmag.com, 7news.com.au
German237, German236, 0.979, Information-Propagated, watson, watson, aargauerzeitung.ch, aargauerzeitung.ch
";

    #[test]
    fn parses_table_rows() {
        let pairs = parse_pairs_from_reader(TABLE_PAIRS.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 5);
        assert_eq!(pairs[0].propagation_class, PropagationClass::Unsure);
        assert_eq!(pairs[1].weight, 1.0);
        assert_eq!(pairs[1].propagation_class, PropagationClass::InformationPropagated);
        assert_eq!(pairs[1].to_publisher, "247 Wall St.");
        assert_eq!(pairs[1].from_publisher_uri, "news.sky.com");
    }

    #[test]
    fn header_only_is_empty() {
        let header = format!("{}\n", PAIR_COLUMNS.join(","));
        assert!(parse_pairs_from_reader(header.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn bad_rows_report_position() {
        let bad = TABLE_PAIRS.replace("0.313, Information-Not-Propagated", "0.313, Maybe");
        match parse_pairs_from_reader(bad.as_bytes()) {
            Err(IngestError::UnknownClassLabel { row: 3, label }) => assert_eq!(label, "Maybe"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = TABLE_PAIRS.replace("0.238", "heavy");
        assert!(matches!(
            parse_pairs_from_reader(bad.as_bytes()),
            Err(IngestError::MalformedRow { row: 4, .. })
        ));
        let bad = TABLE_PAIRS.replace("0.238", "1.5");
        assert!(matches!(
            parse_pairs_from_reader(bad.as_bytes()),
            Err(IngestError::MalformedRow { row: 4, .. })
        ));
        let bad = TABLE_PAIRS.replace("from,to,", "source,to,");
        assert!(matches!(
            parse_pairs_from_reader(bad.as_bytes()),
            Err(IngestError::MalformedRow { row: 0, .. })
        ));
    }

    #[test]
    fn filter_keeps_propagated_rows_in_order() {
        let pairs = parse_pairs_from_reader(TABLE_PAIRS.as_bytes()).unwrap();
        let kept = filter_propagated(&pairs);
        let ids: Vec<_> = kept.iter().map(|p| p.from_id.as_str()).collect();
        assert_eq!(ids, ["English881", "German237"]);
        assert_eq!(kept[1].weight, 0.979);
        assert!(filter_propagated(&pairs[..1]).is_empty());
    }

    #[test]
    fn class_weight_consistency() {
        let pairs = parse_pairs_from_reader(TABLE_PAIRS.as_bytes()).unwrap();
        assert_eq!(count_inconsistent(&pairs), 0);
        let mut odd = pairs[1].clone();
        odd.weight = 0.65;
        assert_eq!(count_inconsistent(&[odd]), 1);
    }

    #[test]
    fn concept_lines_merge_by_union() {
        let text = r#"{"article": "English881", "concepts": ["Earthquake", "Richter_scale"]}

{"article": "English881", "concepts": ["Earthquake", "Tsunami"]}
{"article": "German237", "concepts": []}
"#;
        let idx = ConceptIndex::from_reader(text.as_bytes()).unwrap();
        let got: Vec<_> = idx.get("English881").unwrap().iter().cloned().collect();
        assert_eq!(got, ["Earthquake", "Richter_scale", "Tsunami"]);
        assert!(idx.get("English880").is_none());
        assert!(idx.get("German237").unwrap().is_empty());

        let bad = "{\"article\": \"x\"}\n";
        assert!(matches!(
            ConceptIndex::from_reader(bad.as_bytes()),
            Err(IngestError::MalformedLine { line: 1, .. })
        ));
    }

    fn publishers() -> PublisherStore {
        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let csv = "publisher_uri,publisher_name,country_code,political_alignment\n\
                   news.sky.com,Sky News,GB,\n\
                   247wallst.com,247 Wall St.,US,\n";
        PublisherStore::from_reader(csv.as_bytes(), &countries).unwrap()
    }

    #[test]
    fn examples_use_source_article_and_tally_drops() {
        let pairs = filter_propagated(&parse_pairs_from_reader(TABLE_PAIRS.as_bytes()).unwrap());
        let mut concepts = ConceptIndex::default();
        concepts.insert("English881", ["Earthquake".to_string()]);
        concepts.insert("German237", ["FIFA_World_Cup".to_string()]);
        let (examples, report) = to_spreading_examples(&pairs, &concepts, &publishers(), "earthquake");
        assert_eq!(examples.len(), 1);
        assert_eq!(examples[0].article_id, "English881");
        assert_eq!(examples[0].target_publisher_uri, "247wallst.com");
        assert_eq!(report.drops[&IngestDrop::MissingPublisher], 1);
        assert_eq!(report.examples + report.total_drops(), pairs.len());

        let (none, empty) = to_spreading_examples(&[], &concepts, &publishers(), "earthquake");
        assert!(none.is_empty());
        assert!(empty.drops.is_empty());
    }

    #[test]
    fn missing_concepts_are_dropped() {
        let pairs = filter_propagated(&parse_pairs_from_reader(TABLE_PAIRS.as_bytes()).unwrap());
        let (examples, report) =
            to_spreading_examples(&pairs[..1], &ConceptIndex::default(), &publishers(), "e");
        assert!(examples.is_empty());
        assert_eq!(report.drops[&IngestDrop::MissingConcepts], 1);
        assert!(report.render().contains("MissingConcepts: 1"));
    }

    fn arb_pair() -> impl Strategy<Value = ArticlePair> {
        let id = "[A-Za-z]{1,8}[0-9]{0,4}";
        let text = "[A-Za-z0-9 .,\"-]{0,12}";
        (
            id,
            id,
            0u32..=1000,
            prop_oneof![
                Just(PropagationClass::InformationPropagated),
                Just(PropagationClass::Unsure),
                Just(PropagationClass::InformationNotPropagated)
            ],
            text,
            text,
            "[a-z0-9.]{1,12}",
            "[a-z0-9.]{1,12}",
        )
            .prop_map(|(f, t, w, c, fp, tp, fu, tu)| ArticlePair {
                from_id: f,
                to_id: t,
                weight: f64::from(w) / 1000.0,
                propagation_class: c,
                from_publisher: fp.trim().to_string(),
                to_publisher: tp.trim().to_string(),
                from_publisher_uri: fu,
                to_publisher_uri: tu,
            })
    }

    proptest! {
        #[test]
        fn pairs_round_trip(pairs in proptest::collection::vec(arb_pair(), 0..20)) {
            let mut buf = Vec::new();
            write_pairs(&pairs, &mut buf).unwrap();
            let again = parse_pairs_from_reader(buf.as_slice()).unwrap();
            prop_assert_eq!(again, pairs);
        }

        #[test]
        fn filter_is_idempotent(pairs in proptest::collection::vec(arb_pair(), 0..30)) {
            let once = filter_propagated(&pairs);
            prop_assert_eq!(filter_propagated(&once), once);
        }
    }
}
