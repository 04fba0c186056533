//! Synthetic corpora with planted barrier labels.
//!
//! Every country belongs to a latent economic cluster, a cultural cluster
//! and a time-zone group. Cluster prototypes have disjoint support, so two
//! countries in different clusters have cosine similarity 0, while members
//! of one cluster differ only by a few percent of jitter and stay far above
//! any threshold below 0.99. Labels therefore follow from the latent
//! assignment alone and are written to `truth.csv` next to the corpus.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierKind;
use crate::ingest::{write_pairs, ArticlePair, ConceptIndex, PropagationClass};
use crate::knowledge::{
    CountryProfile, CulturalVector, EconomicVector, KnowledgeError, ProfileStore, PublisherRecord, PublisherStore,
    CULTURAL_DIMENSIONS, ECONOMIC_INDICATORS,
};
use crate::rng;

pub const PAIRS_FILE: &str = "pairs.csv";
pub const CONCEPTS_FILE: &str = "concepts.jsonl";
pub const COUNTRIES_FILE: &str = "countries.csv";
pub const PUBLISHERS_FILE: &str = "publishers.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const LATENT_FILE: &str = "latent.csv";
pub const SPEC_FILE: &str = "synth.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_countries: usize,
    pub n_publishers: usize,
    /// Propagated pairs, i.e. spreading examples.
    pub n_examples: usize,
    /// Extra unsure or not-propagated pairs that ingest must filter out.
    pub n_other_pairs: usize,
    pub concept_pool: usize,
    pub concepts_per_article: usize,
    pub economic_clusters: usize,
    pub cultural_clusters: usize,
    pub utc_groups: usize,
    pub alignments: Vec<String>,
    /// Share of publishers with no known alignment.
    pub unknown_alignment_rate: f64,
    /// Share of examples whose source and target publisher coincide.
    pub same_publisher_rate: f64,
    /// Force source and target publishers into different countries.
    pub cross_country_only: bool,
    /// Chance that an article mentions its source and target regions.
    pub signal_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_countries: 8,
            n_publishers: 24,
            n_examples: 500,
            n_other_pairs: 125,
            concept_pool: 150,
            concepts_per_article: 8,
            economic_clusters: 3,
            cultural_clusters: 3,
            utc_groups: 3,
            alignments: vec!["left-wing".into(), "centre".into(), "right-wing".into()],
            unknown_alignment_rate: 0.2,
            same_publisher_rate: 0.05,
            cross_country_only: false,
            signal_rate: 0.6,
            seed: 7,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Latent assignment of one country.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentCountry {
    pub country_code: String,
    pub economic_cluster: usize,
    pub cultural_cluster: usize,
    pub utc_group: usize,
}

/// Planted labels of one spreading example, in [`BarrierKind::ALL`] order;
/// `None` where the barrier cannot be decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub article_id: String,
    pub source_publisher_uri: String,
    pub target_publisher_uri: String,
    pub labels: [Option<bool>; 5],
}

impl TruthRow {
    pub fn label(&self, kind: BarrierKind) -> Option<bool> {
        let i = BarrierKind::ALL.iter().position(|k| *k == kind).expect("kind is listed");
        self.labels[i]
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub pairs: Vec<ArticlePair>,
    pub concepts: ConceptIndex,
    pub countries: ProfileStore,
    pub publishers: PublisherStore,
    pub latent: Vec<LatentCountry>,
    pub truth: Vec<TruthRow>,
}

const COUNTRY_STREAM: u64 = 1;
const PUBLISHER_STREAM: u64 = 2;
const PAIR_STREAM: u64 = 3;
const CONCEPT_STREAM: u64 = 4;

fn check_rate(name: &str, v: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!("{name} = {v} is not in [0, 1]")))
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_countries == 0 || self.n_countries > 26 * 26 {
            return bad(format!("n_countries = {} must be in 1..=676", self.n_countries));
        }
        if self.n_publishers < self.n_countries {
            return bad("n_publishers must be at least n_countries".into());
        }
        if self.n_examples == 0 {
            return bad("n_examples must be positive".into());
        }
        if self.concepts_per_article == 0 || self.concepts_per_article > self.concept_pool {
            return bad("concepts_per_article must be in 1..=concept_pool".into());
        }
        if !(1..=ECONOMIC_INDICATORS.len()).contains(&self.economic_clusters) {
            return bad(format!("economic_clusters must be in 1..={}", ECONOMIC_INDICATORS.len()));
        }
        if !(1..=CULTURAL_DIMENSIONS.len()).contains(&self.cultural_clusters) {
            return bad(format!("cultural_clusters must be in 1..={}", CULTURAL_DIMENSIONS.len()));
        }
        if !(1..=25).contains(&self.utc_groups) {
            return bad("utc_groups must be in 1..=25".into());
        }
        if self.alignments.is_empty() {
            return bad("alignments must not be empty".into());
        }
        let normalized: BTreeSet<Option<String>> = self
            .alignments
            .iter()
            .map(|a| crate::knowledge::normalize_alignment(a))
            .collect();
        if normalized.len() != self.alignments.len() || normalized.contains(&None) {
            return bad("alignments must be distinct and not blank or unknown".into());
        }
        if self.cross_country_only && self.n_countries < 2 {
            return bad("cross_country_only needs at least two countries".into());
        }
        check_rate("unknown_alignment_rate", self.unknown_alignment_rate)?;
        check_rate("same_publisher_rate", self.same_publisher_rate)?;
        check_rate("signal_rate", self.signal_rate)?;
        if self.cross_country_only && self.same_publisher_rate > 0.0 {
            return bad("cross_country_only excludes same-publisher pairs".into());
        }
        Ok(())
    }
}

fn country_code(i: usize) -> String {
    let a = (b'A' + (i / 26) as u8) as char;
    let b = (b'A' + (i % 26) as u8) as char;
    format!("{a}{b}")
}

/// Prototype of `cluster` out of `k` over `d` dimensions: positive on the
/// cluster's own slice of dimensions, zero elsewhere.
fn prototype(cluster: usize, k: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| if j % k == cluster { 20.0 + 10.0 * (j / k) as f64 } else { 0.0 })
        .collect()
}

/// Rounds to 4 decimals so values survive a text round trip unchanged.
fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn jittered<R: rand::RngCore>(r: &mut R, proto: &[f64]) -> Vec<f64> {
    proto
        .iter()
        .map(|&x| if x == 0.0 { 0.0 } else { round4(x * (0.97 + 0.06 * rng::unit(r))) })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SynthError> {
    spec.validate()?;

    let mut r = rng::stream(spec.seed, COUNTRY_STREAM);
    let mut latent = Vec::with_capacity(spec.n_countries);
    let mut profiles = Vec::with_capacity(spec.n_countries);
    for i in 0..spec.n_countries {
        let l = LatentCountry {
            country_code: country_code(i),
            economic_cluster: rng::below(&mut r, spec.economic_clusters as u64) as usize,
            cultural_cluster: rng::below(&mut r, spec.cultural_clusters as u64) as usize,
            utc_group: rng::below(&mut r, spec.utc_groups as u64) as usize,
        };
        let econ = jittered(
            &mut r,
            &prototype(l.economic_cluster, spec.economic_clusters, ECONOMIC_INDICATORS.len()),
        );
        let cult = jittered(
            &mut r,
            &prototype(l.cultural_cluster, spec.cultural_clusters, CULTURAL_DIMENSIONS.len()),
        );
        let t = i as f64 / spec.n_countries as f64;
        profiles.push(CountryProfile {
            country_code: l.country_code.clone(),
            economic: EconomicVector(econ.try_into().expect("13 indicators")),
            cultural: CulturalVector(cult.try_into().expect("6 dimensions")),
            latitude: round4(-60.0 + 120.0 * t),
            longitude: round4(-170.0 + 340.0 * t),
            utc_offset: -720 + 60 * l.utc_group as i32,
        });
        latent.push(l);
    }
    let countries = ProfileStore::from_profiles(profiles)?;

    let mut r = rng::stream(spec.seed, PUBLISHER_STREAM);
    let mut publisher_country = Vec::with_capacity(spec.n_publishers);
    let mut records = Vec::with_capacity(spec.n_publishers);
    for i in 0..spec.n_publishers {
        // round-robin first so every country has at least one publisher
        let c = if i < spec.n_countries {
            i
        } else {
            rng::below(&mut r, spec.n_countries as u64) as usize
        };
        let alignment = if rng::unit(&mut r) < spec.unknown_alignment_rate {
            None
        } else {
            Some(spec.alignments[rng::below(&mut r, spec.alignments.len() as u64) as usize].clone())
        };
        publisher_country.push(c);
        records.push(PublisherRecord {
            publisher_uri: format!("pub{i:03}.example"),
            publisher_name: format!("Publisher {i}"),
            country_code: country_code(c),
            political_alignment: alignment,
            incomplete: false,
        });
    }
    let publishers = PublisherStore::from_records(records, &countries)?;
    let records: Vec<PublisherRecord> = publishers.iter().cloned().collect();

    let mut r = rng::stream(spec.seed, PAIR_STREAM);
    let mut c = rng::stream(spec.seed, CONCEPT_STREAM);
    let mut concepts = ConceptIndex::default();
    let mut truth = Vec::with_capacity(spec.n_examples);
    let mut pairs = Vec::with_capacity(spec.n_examples + spec.n_other_pairs);
    let n_pub = spec.n_publishers as u64;
    for i in 0..spec.n_examples + spec.n_other_pairs {
        let propagated = i < spec.n_examples;
        let s = rng::below(&mut r, n_pub) as usize;
        let t = if !spec.cross_country_only && rng::unit(&mut r) < spec.same_publisher_rate {
            s
        } else {
            loop {
                let t = rng::below(&mut r, n_pub) as usize;
                let clash = if spec.cross_country_only {
                    publisher_country[t] == publisher_country[s]
                } else {
                    t == s
                };
                if !clash || spec.n_publishers == 1 {
                    break t;
                }
            }
        };
        let (weight, class) = if propagated {
            (0.7 + round4(0.3 * rng::unit(&mut r)), PropagationClass::InformationPropagated)
        } else if rng::unit(&mut r) < 0.5 {
            (0.4 + round4(0.29 * rng::unit(&mut r)), PropagationClass::Unsure)
        } else {
            (round4(0.39 * rng::unit(&mut r)), PropagationClass::InformationNotPropagated)
        };
        let from_id = format!("Syn{i}");
        let to_id = format!("Syn{i}x");
        let (sp, tp) = (&records[s], &records[t]);
        pairs.push(ArticlePair {
            from_id: from_id.clone(),
            to_id: to_id.clone(),
            weight: round4(weight),
            propagation_class: class,
            from_publisher: sp.publisher_name.clone(),
            to_publisher: tp.publisher_name.clone(),
            from_publisher_uri: sp.publisher_uri.clone(),
            to_publisher_uri: tp.publisher_uri.clone(),
        });

        for article in [&from_id, &to_id] {
            let mut set = BTreeSet::new();
            while set.len() < spec.concepts_per_article {
                // squaring skews draws toward low ids, giving a long tail
                let u = rng::unit(&mut c);
                let j = ((u * u) * spec.concept_pool as f64) as usize;
                set.insert(format!("Topic_{j:04}"));
            }
            if rng::unit(&mut c) < spec.signal_rate {
                set.insert(format!("Origin_{}", sp.country_code));
                set.insert(format!("Reach_{}", tp.country_code));
            }
            concepts.insert(article.clone(), set);
        }

        if propagated {
            let (ls, lt) = (&latent[publisher_country[s]], &latent[publisher_country[t]]);
            let political = match (&sp.political_alignment, &tp.political_alignment) {
                (Some(a), Some(b)) => Some(a != b),
                _ => None,
            };
            truth.push(TruthRow {
                article_id: from_id,
                source_publisher_uri: sp.publisher_uri.clone(),
                target_publisher_uri: tp.publisher_uri.clone(),
                labels: [
                    Some(ls.economic_cluster != lt.economic_cluster),
                    Some(ls.cultural_cluster != lt.cultural_cluster),
                    Some(ls.country_code != lt.country_code),
                    Some(ls.utc_group != lt.utc_group),
                    political,
                ],
            });
        }
    }
    // interleave propagated and other pairs so ingest has to filter
    rng::shuffle(&mut r, &mut pairs);

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        pairs,
        concepts,
        countries,
        publishers,
        latent,
        truth,
    })
}

fn label_text(l: Option<bool>) -> &'static str {
    match l {
        Some(true) => "TRUE",
        Some(false) => "FALSE",
        None => "NA",
    }
}

impl SyntheticCorpus {
    /// Writes every corpus file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| SynthError::Io { path, source }
        };
        let csv_io = |path: &Path| {
            let path = path.display().to_string();
            move |e: csv::Error| SynthError::Io {
                path,
                source: e.into(),
            }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let create = |name: &str| {
            let p = dir.join(name);
            fs::File::create(&p).map(BufWriter::new).map_err(io(&p))
        };

        let p = dir.join(PAIRS_FILE);
        write_pairs(&self.pairs, create(PAIRS_FILE)?).map_err(csv_io(&p))?;
        let p = dir.join(CONCEPTS_FILE);
        self.concepts.write(create(CONCEPTS_FILE)?).map_err(io(&p))?;
        let p = dir.join(COUNTRIES_FILE);
        self.countries.write(create(COUNTRIES_FILE)?).map_err(csv_io(&p))?;
        let p = dir.join(PUBLISHERS_FILE);
        self.publishers.write(create(PUBLISHERS_FILE)?).map_err(csv_io(&p))?;

        let p = dir.join(TRUTH_FILE);
        let mut w = csv::Writer::from_writer(create(TRUTH_FILE)?);
        let mut header = vec!["article_id", "from-pub-uri", "to-pub-uri"];
        header.extend(BarrierKind::ALL.iter().map(|k| k.slug()));
        w.write_record(&header).map_err(csv_io(&p))?;
        for t in &self.truth {
            let mut rec = vec![
                t.article_id.as_str(),
                t.source_publisher_uri.as_str(),
                t.target_publisher_uri.as_str(),
            ];
            rec.extend(t.labels.iter().map(|l| label_text(*l)));
            w.write_record(&rec).map_err(csv_io(&p))?;
        }
        w.flush().map_err(io(&p))?;

        let p = dir.join(LATENT_FILE);
        let mut w = csv::Writer::from_writer(create(LATENT_FILE)?);
        w.write_record(["country_code", "economic_cluster", "cultural_cluster", "utc_group"])
            .map_err(csv_io(&p))?;
        for l in &self.latent {
            w.write_record([
                l.country_code.clone(),
                l.economic_cluster.to_string(),
                l.cultural_cluster.to_string(),
                l.utc_group.to_string(),
            ])
            .map_err(csv_io(&p))?;
        }
        w.flush().map_err(io(&p))?;

        let p = dir.join(SPEC_FILE);
        let text = toml::to_string(&self.spec).expect("spec serializes");
        let mut f = create(SPEC_FILE)?;
        f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(io(&p))?;
        Ok(())
    }
}
