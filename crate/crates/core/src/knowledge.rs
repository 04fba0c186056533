//! Publisher and country metadata backing every barrier.
//!
//! Two tabular sources feed this module:
//!
//! * `countries.csv`: one row per country with coordinates, principal UTC
//!   offset (minutes), six cultural dimensions and thirteen economic
//!   indicators.
//! * `publishers.csv`: one row per publisher URI with its headquarters
//!   country and, when known, an editorial political alignment.
//!
//! Both stores are immutable once loaded. [`KnowledgeBase`] joins them and
//! serves the numeric profile block for each barrier kind.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierKind;

/// Economic indicator column names, in storage order.
pub const ECONOMIC_INDICATORS: [&str; 13] = [
    "Rank",
    "Safety-Security",
    "Personal-Freedom",
    "Governance",
    "Social-Capital",
    "Investment-Environment",
    "Enterprise-Conditions",
    "Market-Infrastructure",
    "Economic-Quality",
    "Living-Conditions",
    "Health",
    "Education",
    "Natural-Environment",
];

/// Cultural dimension column names, in storage order.
pub const CULTURAL_DIMENSIONS: [&str; 6] = [
    "Power-Distance",
    "Uncertainty-Avoidance-By-Individuals",
    "Individualistic-Cultures",
    "Masculinity-Femininity",
    "Long-Term-Orientation",
    "Indulgence-Restraint",
];

pub const COUNTRY_CODE: &str = "country_code";
pub const LATITUDE: &str = "latitude";
pub const LONGITUDE: &str = "longitude";
pub const UTC_OFFSET: &str = "utc_offset";

pub const PUBLISHER_COLUMNS: [&str; 4] = [
    "publisher_uri",
    "publisher_name",
    "country_code",
    "political_alignment",
];

pub const MIN_UTC_OFFSET: i32 = -720;
pub const MAX_UTC_OFFSET: i32 = 840;

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: non-finite value in column `{column}`")]
    NonFiniteValue { row: usize, column: String },
    #[error("row {row}: value {value} out of range in column `{column}`")]
    RangeViolation { row: usize, column: String, value: f64 },
    #[error("row {row}: {vector} vector is all zero")]
    ZeroProfile { row: usize, vector: &'static str },
    #[error("duplicate country `{0}`")]
    DuplicateCountry(String),
    #[error("duplicate publisher `{0}`")]
    DuplicatePublisher(String),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("publisher `{0}` has no resolvable country profile")]
    IncompleteMetadata(String),
    #[error("publisher `{0}` has no known political alignment")]
    UnknownAlignment(String),
    #[error("invalid profile options: {0}")]
    InvalidOptions(String),
}

pub type Result<T, E = KnowledgeError> = std::result::Result<T, E>;

/// Normalizes an ISO alpha-2 code to upper case.
pub fn normalize_country_code(raw: &str) -> String {
    raw.trim().to_ascii_uppercase()
}

/// Publisher URIs are matched exactly after trimming and lowercasing.
pub fn normalize_uri(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Lowercases and joins words with hyphens; blank and `unknown` mean absent.
pub fn normalize_alignment(raw: &str) -> Option<String> {
    let joined = raw
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join("-");
    if joined.is_empty() || joined == "unknown" {
        None
    } else {
        Some(joined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicVector(pub [f64; 13]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CulturalVector(pub [f64; 6]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country_code: String,
    pub economic: EconomicVector,
    pub cultural: CulturalVector,
    pub latitude: f64,
    pub longitude: f64,
    /// Principal zone offset in minutes east of UTC.
    pub utc_offset: i32,
}

/// Countries keyed by their normalized alpha-2 code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileStore {
    profiles: BTreeMap<String, CountryProfile>,
}

fn csv_reader<R: Read>(rdr: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(rdr)
}

fn malformed(row: usize, err: csv::Error) -> KnowledgeError {
    KnowledgeError::MalformedRow {
        row,
        reason: err.to_string(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| KnowledgeError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| KnowledgeError::MissingColumn(name.to_string()))
}

fn parse_finite(field: &str, row: usize, column: &str) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| KnowledgeError::MalformedRow {
        row,
        reason: format!("`{field}` is not a number in column `{column}`"),
    })?;
    if !value.is_finite() {
        return Err(KnowledgeError::NonFiniteValue {
            row,
            column: column.to_string(),
        });
    }
    Ok(value)
}

impl ProfileStore {
    /// Reads `countries.csv` from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    /// Columns are located by name; extra columns are ignored.
    pub fn from_reader<R: Read>(rdr: R) -> Result<Self> {
        let mut reader = csv_reader(rdr);
        let headers = reader
            .headers()
            .map_err(|e| malformed(0, e))?
            .clone();
        let code_idx = column_index(&headers, COUNTRY_CODE)?;
        let lat_idx = column_index(&headers, LATITUDE)?;
        let lon_idx = column_index(&headers, LONGITUDE)?;
        let utc_idx = column_index(&headers, UTC_OFFSET)?;
        let cultural_idx = CULTURAL_DIMENSIONS
            .iter()
            .map(|c| column_index(&headers, c))
            .collect::<Result<Vec<_>>>()?;
        let economic_idx = ECONOMIC_INDICATORS
            .iter()
            .map(|c| column_index(&headers, c))
            .collect::<Result<Vec<_>>>()?;

        let mut profiles = BTreeMap::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| malformed(row, e))?;
            let code = normalize_country_code(&record[code_idx]);
            if code.len() != 2 || !code.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(KnowledgeError::MalformedRow {
                    row,
                    reason: format!("`{}` is not an alpha-2 country code", &record[code_idx]),
                });
            }
            let latitude = parse_finite(&record[lat_idx], row, LATITUDE)?;
            if !(-90.0..=90.0).contains(&latitude) {
                return Err(KnowledgeError::RangeViolation {
                    row,
                    column: LATITUDE.into(),
                    value: latitude,
                });
            }
            let longitude = parse_finite(&record[lon_idx], row, LONGITUDE)?;
            if !(-180.0..=180.0).contains(&longitude) {
                return Err(KnowledgeError::RangeViolation {
                    row,
                    column: LONGITUDE.into(),
                    value: longitude,
                });
            }
            let utc_raw = &record[utc_idx];
            let utc_offset: i32 = utc_raw.parse().map_err(|_| KnowledgeError::MalformedRow {
                row,
                reason: format!("`{utc_raw}` is not an integer minute offset"),
            })?;
            if !(MIN_UTC_OFFSET..=MAX_UTC_OFFSET).contains(&utc_offset) {
                return Err(KnowledgeError::RangeViolation {
                    row,
                    column: UTC_OFFSET.into(),
                    value: f64::from(utc_offset),
                });
            }
            let mut cultural = [0.0; 6];
            for (slot, (&idx, name)) in cultural
                .iter_mut()
                .zip(cultural_idx.iter().zip(CULTURAL_DIMENSIONS))
            {
                *slot = parse_finite(&record[idx], row, name)?;
            }
            let mut economic = [0.0; 13];
            for (slot, (&idx, name)) in economic
                .iter_mut()
                .zip(economic_idx.iter().zip(ECONOMIC_INDICATORS))
            {
                *slot = parse_finite(&record[idx], row, name)?;
            }
            if cultural.iter().all(|v| *v == 0.0) {
                return Err(KnowledgeError::ZeroProfile {
                    row,
                    vector: "cultural",
                });
            }
            if economic.iter().all(|v| *v == 0.0) {
                return Err(KnowledgeError::ZeroProfile {
                    row,
                    vector: "economic",
                });
            }
            if profiles.contains_key(&code) {
                return Err(KnowledgeError::DuplicateCountry(code));
            }
            profiles.insert(
                code.clone(),
                CountryProfile {
                    country_code: code,
                    economic: EconomicVector(economic),
                    cultural: CulturalVector(cultural),
                    latitude,
                    longitude,
                    utc_offset,
                },
            );
        }
        Ok(Self { profiles })
    }

    pub fn from_profiles(profiles: impl IntoIterator<Item = CountryProfile>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in profiles {
            let code = normalize_country_code(&p.country_code);
            if map.insert(code.clone(), CountryProfile { country_code: code.clone(), ..p }).is_some() {
                return Err(KnowledgeError::DuplicateCountry(code));
            }
        }
        Ok(Self { profiles: map })
    }

    /// Writes the canonical column order; floats use their shortest
    /// round-tripping representation.
    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![COUNTRY_CODE, LATITUDE, LONGITUDE, UTC_OFFSET];
        header.extend(CULTURAL_DIMENSIONS);
        header.extend(ECONOMIC_INDICATORS);
        w.write_record(&header)?;
        for p in self.profiles.values() {
            let mut row = vec![
                p.country_code.clone(),
                p.latitude.to_string(),
                p.longitude.to_string(),
                p.utc_offset.to_string(),
            ];
            row.extend(p.cultural.0.iter().map(f64::to_string));
            row.extend(p.economic.0.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, code: &str) -> Option<&CountryProfile> {
        self.profiles.get(&normalize_country_code(code))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryProfile> {
        self.profiles.values()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublisherRecord {
    pub publisher_uri: String,
    pub publisher_name: String,
    pub country_code: String,
    pub political_alignment: Option<String>,
    /// Set when `country_code` has no row in the country store.
    pub incomplete: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PublisherStore {
    records: Vec<PublisherRecord>,
    by_uri: HashMap<String, usize>,
    alignments: Vec<String>,
}

impl PublisherStore {
    pub fn load(path: impl AsRef<Path>, countries: &ProfileStore) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?, countries)
    }

    pub fn from_reader<R: Read>(rdr: R, countries: &ProfileStore) -> Result<Self> {
        let mut reader = csv_reader(rdr);
        let headers = reader
            .headers()
            .map_err(|e| malformed(0, e))?
            .clone();
        let idx = PUBLISHER_COLUMNS
            .iter()
            .map(|c| column_index(&headers, c))
            .collect::<Result<Vec<_>>>()?;

        let mut store = Self::default();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| malformed(row, e))?;
            let uri = normalize_uri(&record[idx[0]]);
            if uri.is_empty() {
                return Err(KnowledgeError::MalformedRow {
                    row,
                    reason: "empty publisher_uri".into(),
                });
            }
            let country_code = normalize_country_code(&record[idx[2]]);
            let incomplete = countries.get(&country_code).is_none();
            store.insert(PublisherRecord {
                publisher_uri: uri,
                publisher_name: record[idx[1]].to_string(),
                country_code,
                political_alignment: normalize_alignment(&record[idx[3]]),
                incomplete,
            })?;
        }
        Ok(store)
    }

    /// Builds a store from records that already carry normalized fields.
    pub fn from_records(
        records: impl IntoIterator<Item = PublisherRecord>,
        countries: &ProfileStore,
    ) -> Result<Self> {
        let mut store = Self::default();
        for mut r in records {
            r.publisher_uri = normalize_uri(&r.publisher_uri);
            r.country_code = normalize_country_code(&r.country_code);
            r.political_alignment = r.political_alignment.as_deref().and_then(normalize_alignment);
            r.incomplete = countries.get(&r.country_code).is_none();
            store.insert(r)?;
        }
        Ok(store)
    }

    fn insert(&mut self, record: PublisherRecord) -> Result<()> {
        if self.by_uri.contains_key(&record.publisher_uri) {
            return Err(KnowledgeError::DuplicatePublisher(record.publisher_uri));
        }
        if let Some(a) = &record.political_alignment {
            if !self.alignments.contains(a) {
                self.alignments.push(a.clone());
            }
        }
        self.by_uri
            .insert(record.publisher_uri.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(PUBLISHER_COLUMNS)?;
        for r in &self.records {
            w.write_record([
                r.publisher_uri.as_str(),
                r.publisher_name.as_str(),
                r.country_code.as_str(),
                r.political_alignment.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, uri: &str) -> Option<&PublisherRecord> {
        self.by_uri.get(&normalize_uri(uri)).map(|&i| &self.records[i])
    }

    /// Alignments in order of first appearance; defines the one-hot layout.
    pub fn alignment_vocabulary(&self) -> &[String] {
        &self.alignments
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PublisherRecord> {
        self.records.iter()
    }
}

/// How raw country vectors are turned into profile blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Indices into [`ECONOMIC_INDICATORS`]; defaults to all thirteen.
    pub economic_indicators: Vec<usize>,
    /// Rescale each economic and cultural feature to [0, 1] over the
    /// country store before use.
    pub min_max_scale: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            economic_indicators: (0..ECONOMIC_INDICATORS.len()).collect(),
            min_max_scale: false,
        }
    }
}

impl ProfileOptions {
    /// Selects economic indicators by column name.
    pub fn with_economic_names<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        self.economic_indicators = names
            .iter()
            .map(|n| {
                ECONOMIC_INDICATORS
                    .iter()
                    .position(|c| *c == n.as_ref())
                    .ok_or_else(|| KnowledgeError::InvalidOptions(format!("unknown indicator `{}`", n.as_ref())))
            })
            .collect::<Result<_>>()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.economic_indicators.is_empty() {
            return Err(KnowledgeError::InvalidOptions("no economic indicators selected".into()));
        }
        let mut seen = HashSet::new();
        for &i in &self.economic_indicators {
            if i >= ECONOMIC_INDICATORS.len() || !seen.insert(i) {
                return Err(KnowledgeError::InvalidOptions(format!("bad economic indicator index {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct MinMax {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMax {
    fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> Self {
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    fn apply(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            let span = self.max[j] - self.min[j];
            *v = if span > 0.0 { (*v - self.min[j]) / span } else { 0.0 };
        }
    }
}

/// Joined publisher and country metadata.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    countries: ProfileStore,
    publishers: PublisherStore,
    options: ProfileOptions,
    economic_scale: Option<MinMax>,
    cultural_scale: Option<MinMax>,
}

impl KnowledgeBase {
    pub fn new(countries: ProfileStore, publishers: PublisherStore) -> Self {
        Self::with_options(countries, publishers, ProfileOptions::default())
            .expect("default profile options are valid")
    }

    pub fn with_options(
        countries: ProfileStore,
        publishers: PublisherStore,
        options: ProfileOptions,
    ) -> Result<Self> {
        options.validate()?;
        let (economic_scale, cultural_scale) = if options.min_max_scale {
            let econ: Vec<Vec<f64>> = countries
                .iter()
                .map(|c| select(&c.economic.0, &options.economic_indicators))
                .collect();
            (
                Some(MinMax::fit(econ.iter().map(Vec::as_slice), options.economic_indicators.len())),
                Some(MinMax::fit(countries.iter().map(|c| &c.cultural.0[..]), 6)),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            countries,
            publishers,
            options,
            economic_scale,
            cultural_scale,
        })
    }

    pub fn countries(&self) -> &ProfileStore {
        &self.countries
    }

    pub fn publishers(&self) -> &PublisherStore {
        &self.publishers
    }

    pub fn options(&self) -> &ProfileOptions {
        &self.options
    }

    pub fn publisher(&self, uri: &str) -> Option<&PublisherRecord> {
        self.publishers.get(uri)
    }

    pub fn country_of(&self, publisher: &PublisherRecord) -> Option<&CountryProfile> {
        self.countries.get(&publisher.country_code)
    }

    /// Economic vector after indicator selection and optional scaling.
    pub fn economic_vector(&self, country: &CountryProfile) -> Vec<f64> {
        let mut v = select(&country.economic.0, &self.options.economic_indicators);
        if let Some(s) = &self.economic_scale {
            s.apply(&mut v);
        }
        v
    }

    pub fn cultural_vector(&self, country: &CountryProfile) -> Vec<f64> {
        let mut v = country.cultural.0.to_vec();
        if let Some(s) = &self.cultural_scale {
            s.apply(&mut v);
        }
        v
    }

    /// Column names of the profile block for `kind`.
    pub fn profile_columns(&self, kind: BarrierKind) -> Vec<String> {
        match kind {
            BarrierKind::Economic => self
                .options
                .economic_indicators
                .iter()
                .map(|&i| ECONOMIC_INDICATORS[i].to_string())
                .collect(),
            BarrierKind::Cultural => CULTURAL_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
            BarrierKind::Geographical => vec!["Latitude".into(), "Longitude".into()],
            BarrierKind::TimeZone => vec!["UTC-offset".into()],
            BarrierKind::Political => self
                .publishers
                .alignment_vocabulary()
                .iter()
                .map(|a| format!("Political-Alignment:{a}"))
                .collect(),
        }
    }

    /// Numeric feature block describing `publisher` for one barrier.
    pub fn barrier_profile(&self, publisher: &PublisherRecord, kind: BarrierKind) -> Result<Vec<f64>> {
        if kind == BarrierKind::Political {
            let alignment = publisher
                .political_alignment
                .as_ref()
                .ok_or_else(|| KnowledgeError::UnknownAlignment(publisher.publisher_uri.clone()))?;
            return Ok(self
                .publishers
                .alignment_vocabulary()
                .iter()
                .map(|a| if a == alignment { 1.0 } else { 0.0 })
                .collect());
        }
        let country = self
            .country_of(publisher)
            .ok_or_else(|| KnowledgeError::IncompleteMetadata(publisher.publisher_uri.clone()))?;
        Ok(match kind {
            BarrierKind::Economic => self.economic_vector(country),
            BarrierKind::Cultural => self.cultural_vector(country),
            BarrierKind::Geographical => vec![country.latitude, country.longitude],
            BarrierKind::TimeZone => vec![f64::from(country.utc_offset)],
            BarrierKind::Political => unreachable!(),
        })
    }
}

fn select(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const COUNTRIES_CSV: &str = "\
country_code,latitude,longitude,utc_offset,Power-Distance,Uncertainty-Avoidance-By-Individuals,Individualistic-Cultures,Masculinity-Femininity,Long-Term-Orientation,Indulgence-Restraint,Rank,Safety-Security,Personal-Freedom,Governance,Social-Capital,Investment-Environment,Enterprise-Conditions,Market-Infrastructure,Economic-Quality,Living-Conditions,Health,Education,Natural-Environment
SI,46.15,14.99,60,71,88,27,19,49,48,27,84.6,77.9,66.1,56.2,64.3,61.2,70.5,64.4,85.9,77.4,79.8,66.2
GB,55.38,-3.44,0,35,35,89,66,51,69,13,79.5,83.6,78.1,60.1,79.4,78.1,81.5,70.6,88.2,79.9,83.4,66.1
DE,51.17,10.45,60,35,65,67,66,83,40,8,87.4,86.7,81.2,62.0,78.5,76.4,84.6,77.7,90.6,82.6,85.7,75.0
AT,47.52,14.55,60,11,70,55,79,60,63,15,88.5,85.4,80.2,60.9,75.0,72.4,80.7,71.5,90.6,82.8,80.5,73.6
";

    pub(crate) const PUBLISHERS_CSV: &str = "\
publisher_uri,publisher_name,country_code,political_alignment
derstandard.at,Der Standard,AT,Social liberalism
dailymail.co.uk,Daily Mail,GB,right-wing
stern.de,Stern,DE,
news.sky.com,Sky News,GB,
delo.si,Delo,SI,centre-left
";

    pub(crate) fn fixture() -> KnowledgeBase {
        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let publishers = PublisherStore::from_reader(PUBLISHERS_CSV.as_bytes(), &countries).unwrap();
        KnowledgeBase::new(countries, publishers)
    }

    fn drop_column(csv: &str, name: &str) -> String {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let skip = header.iter().position(|h| *h == name).unwrap();
        std::iter::once(header)
            .chain(lines.map(|l| l.split(',').collect()))
            .map(|cols: Vec<&str>| {
                cols.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, c)| *c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn loads_fixture_countries() {
        let store = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        assert_eq!(store.len(), 4);
        assert_eq!(store.get("GB").unwrap().utc_offset, 0);
        assert_eq!(store.get("gb").unwrap().country_code, "GB");
        assert_eq!(store.get("SI").unwrap().cultural.0[0], 71.0);
    }

    #[test]
    fn latitude_out_of_range_is_rejected() {
        let bad = COUNTRIES_CSV.replace("SI,46.15", "SI,91");
        match ProfileStore::from_reader(bad.as_bytes()) {
            Err(KnowledgeError::RangeViolation { row: 1, column, .. }) => assert_eq!(column, "latitude"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_governance_column_is_named() {
        let bad = drop_column(COUNTRIES_CSV, "Governance");
        match ProfileStore::from_reader(bad.as_bytes()) {
            Err(KnowledgeError::MissingColumn(c)) => assert_eq!(c, "Governance"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_duplicate_rows_fail() {
        let nan = COUNTRIES_CSV.replace("SI,46.15,14.99,60,71", "SI,46.15,14.99,60,NaN");
        assert!(matches!(
            ProfileStore::from_reader(nan.as_bytes()),
            Err(KnowledgeError::NonFiniteValue { row: 1, .. })
        ));
        let dup = format!("{COUNTRIES_CSV}{}\n", COUNTRIES_CSV.lines().nth(1).unwrap());
        assert!(matches!(
            ProfileStore::from_reader(dup.as_bytes()),
            Err(KnowledgeError::DuplicateCountry(c)) if c == "SI"
        ));
        let utc = COUNTRIES_CSV.replace("GB,55.38,-3.44,0,", "GB,55.38,-3.44,900,");
        assert!(matches!(
            ProfileStore::from_reader(utc.as_bytes()),
            Err(KnowledgeError::RangeViolation { .. })
        ));
    }

    #[test]
    fn store_round_trips_through_csv() {
        let store = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        let again = ProfileStore::from_reader(buf.as_slice()).unwrap();
        assert_eq!(store, again);
    }

    #[test]
    fn publishers_keep_alignment_and_flag_incomplete() {
        let kb = fixture();
        let ds = kb.publisher("derstandard.at").unwrap();
        assert_eq!(ds.political_alignment.as_deref(), Some("social-liberalism"));
        assert!(!ds.incomplete);
        let stern = kb.publisher("  STERN.de ").unwrap();
        assert_eq!(stern.political_alignment, None);

        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let extra = format!("{PUBLISHERS_CSV}sify.com,Sify,IN,\n");
        let pubs = PublisherStore::from_reader(extra.as_bytes(), &countries).unwrap();
        assert!(pubs.get("sify.com").unwrap().incomplete);
    }

    #[test]
    fn duplicate_publisher_is_rejected() {
        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let dup = format!("{PUBLISHERS_CSV}Stern.de,Stern again,DE,\n");
        assert!(matches!(
            PublisherStore::from_reader(dup.as_bytes(), &countries),
            Err(KnowledgeError::DuplicatePublisher(u)) if u == "stern.de"
        ));
        let short = format!("{PUBLISHERS_CSV}x.com,X\n");
        assert!(matches!(
            PublisherStore::from_reader(short.as_bytes(), &countries),
            Err(KnowledgeError::MalformedRow { .. })
        ));
    }

    #[test]
    fn profile_blocks_per_barrier() {
        let kb = fixture();
        let sky = kb.publisher("news.sky.com").unwrap();
        assert_eq!(kb.barrier_profile(sky, BarrierKind::TimeZone).unwrap(), vec![0.0]);
        assert_eq!(kb.barrier_profile(sky, BarrierKind::Economic).unwrap().len(), 13);
        assert_eq!(kb.barrier_profile(sky, BarrierKind::Cultural).unwrap().len(), 6);
        assert_eq!(
            kb.barrier_profile(sky, BarrierKind::Geographical).unwrap(),
            vec![55.38, -3.44]
        );

        let ds = kb.publisher("derstandard.at").unwrap();
        assert_eq!(
            kb.publishers().alignment_vocabulary(),
            ["social-liberalism", "right-wing", "centre-left"]
        );
        assert_eq!(kb.barrier_profile(ds, BarrierKind::Political).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            kb.barrier_profile(sky, BarrierKind::Political),
            Err(KnowledgeError::UnknownAlignment(_))
        ));
    }

    #[test]
    fn two_entry_vocabulary_one_hot() {
        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let pubs = "publisher_uri,publisher_name,country_code,political_alignment\n\
                    derstandard.at,Der Standard,AT,social-liberalism\n\
                    dailymail.co.uk,Daily Mail,GB,right-wing\n";
        let publishers = PublisherStore::from_reader(pubs.as_bytes(), &countries).unwrap();
        let kb = KnowledgeBase::new(countries, publishers);
        let ds = kb.publisher("derstandard.at").unwrap();
        assert_eq!(kb.barrier_profile(ds, BarrierKind::Political).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn unmapped_country_is_incomplete() {
        let kb = fixture();
        let ghost = PublisherRecord {
            publisher_uri: "sify.com".into(),
            publisher_name: "Sify".into(),
            country_code: "IN".into(),
            political_alignment: Some("centre-left".into()),
            incomplete: true,
        };
        assert!(matches!(
            kb.barrier_profile(&ghost, BarrierKind::Economic),
            Err(KnowledgeError::IncompleteMetadata(_))
        ));
        // political needs only the alignment
        assert!(kb.barrier_profile(&ghost, BarrierKind::Political).is_ok());
    }

    #[test]
    fn indicator_subset_and_scaling() {
        let countries = ProfileStore::from_reader(COUNTRIES_CSV.as_bytes()).unwrap();
        let publishers = PublisherStore::from_reader(PUBLISHERS_CSV.as_bytes(), &countries).unwrap();
        let opts = ProfileOptions {
            min_max_scale: true,
            ..ProfileOptions::default()
        }
        .with_economic_names(&["Governance", "Health"])
        .unwrap();
        let kb = KnowledgeBase::with_options(countries, publishers, opts).unwrap();
        assert_eq!(kb.profile_columns(BarrierKind::Economic), ["Governance", "Health"]);
        let de = kb.countries().get("DE").unwrap();
        let v = kb.economic_vector(de);
        assert_eq!(v, vec![1.0, (82.6 - 77.4) / (82.8 - 77.4)]);
        assert!(kb.cultural_vector(de).iter().all(|x| (0.0..=1.0).contains(x)));

        assert!(ProfileOptions::default().with_economic_names(&["GDP"]).is_err());
    }

    #[test]
    fn alignment_normalization() {
        assert_eq!(normalize_alignment("  Social   liberalism "), Some("social-liberalism".into()));
        assert_eq!(normalize_alignment("Right_Wing"), Some("right-wing".into()));
        assert_eq!(normalize_alignment(""), None);
        assert_eq!(normalize_alignment("Unknown"), None);
    }
}
