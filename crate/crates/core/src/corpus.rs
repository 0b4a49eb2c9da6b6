//! Corpus ingestion: page-segmented dissertation records, acknowledgement
//! extraction, and record enrichment (gender, discipline, publication
//! window counts, institution ranking).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default page-size threshold (characters) above which the extractor keeps
/// reading onto the next page.
pub const DEFAULT_MAX_PAGE_CHARS: usize = 1100;

/// Header tokens that open an acknowledgement page, matched case-insensitively
/// against the first token of a page. Covers both US/UK spellings and the
/// singular/plural variants.
const HEADER_TOKENS: [&str; 4] = [
    "acknowledgement",
    "acknowledgements",
    "acknowledgment",
    "acknowledgments",
];

/// Phrases that mark a page as front/back matter rather than acknowledgement
/// continuation, matched against the start of the page's first non-empty line.
const STOP_MARKERS: [&str; 6] = [
    "table of contents",
    "list of figures",
    "list of tables",
    "appendix",
    "chapter",
    "abstract",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document {0} has no pages")]
    EmptyDocument(String),
    #[error("document {0} has no acknowledgement page")]
    NoAcknowledgementFound(String),
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("document {id}: year {year} outside [1900, 2100]")]
    YearOutOfRange { id: String, year: i32 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: invalid json line: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

/// One dissertation as ingested: raw page texts plus catalog metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub pages: Vec<String>,
    pub author_name: String,
    pub university: String,
    pub year: i32,
    #[serde(default)]
    pub subjects: Vec<String>,
    #[serde(default)]
    pub advisor: Option<String>,
    /// Publication years for the author, when a local publication record is
    /// available. Not part of the catalog metadata proper; used to compute
    /// the windowed publication count.
    #[serde(default)]
    pub pub_years: Vec<i32>,
}

/// Extracted acknowledgement section text and the pages it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcknowledgementText {
    pub doc_id: String,
    pub text: String,
    pub source_pages: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    BioHealth,
    LifeEarth,
    MathComp,
    PhysEng,
    SocHum,
    Unknown,
}

impl Discipline {
    pub fn parse(s: &str) -> Option<Discipline> {
        match s.trim() {
            "bio_health" => Some(Discipline::BioHealth),
            "life_earth" => Some(Discipline::LifeEarth),
            "math_comp" => Some(Discipline::MathComp),
            "phys_eng" => Some(Discipline::PhysEng),
            "soc_hum" => Some(Discipline::SocHum),
            "unknown" => Some(Discipline::Unknown),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Discipline::BioHealth => "bio_health",
            Discipline::LifeEarth => "life_earth",
            Discipline::MathComp => "math_comp",
            Discipline::PhysEng => "phys_eng",
            Discipline::SocHum => "soc_hum",
            Discipline::Unknown => "unknown",
        }
    }

    /// The non-unknown categories, in the fixed order used by reports and the
    /// regression design matrix (reference category first).
    pub const KNOWN: [Discipline; 5] = [
        Discipline::BioHealth,
        Discipline::LifeEarth,
        Discipline::MathComp,
        Discipline::PhysEng,
        Discipline::SocHum,
    ];
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A document after enrichment; everything downstream keys off this.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrichedRecord {
    pub doc_id: String,
    pub gender: Gender,
    pub discipline: Discipline,
    pub publication_count: u32,
    pub ranking: Option<u32>,
}

/// Name -> (probability the name is female, observation count).
#[derive(Debug, Clone, Default)]
pub struct NameGenderTable {
    entries: HashMap<String, (f64, u64)>,
}

impl NameGenderTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, probability_female: f64, count: u64) {
        self.entries
            .insert(name.trim().to_lowercase(), (probability_female, count));
    }

    pub fn lookup(&self, name: &str) -> Option<(f64, u64)> {
        self.entries.get(&name.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a `name,probability_female,count` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, CorpusError> {
        let mut table = Self::new();
        let mut reader = csv_reader(path)?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| CorpusError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let name = row.get(0).unwrap_or("").trim();
            let p: f64 = parse_field(&row, 1, path, i + 2)?;
            let count: u64 = parse_field(&row, 2, path, i + 2)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(malformed(path, i + 2, "probability outside [0,1]"));
            }
            table.insert(name, p, count);
        }
        Ok(table)
    }
}

/// Subject string (lowercased, trimmed) -> discipline.
#[derive(Debug, Clone, Default)]
pub struct DisciplineMap {
    entries: HashMap<String, Discipline>,
}

impl DisciplineMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, subject: &str, discipline: Discipline) {
        self.entries
            .insert(subject.trim().to_lowercase(), discipline);
    }

    pub fn lookup(&self, subject: &str) -> Option<Discipline> {
        self.entries.get(&subject.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a `subject,discipline` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, CorpusError> {
        let mut map = Self::new();
        let mut reader = csv_reader(path)?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| CorpusError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let subject = row.get(0).unwrap_or("").trim();
            let disc = row.get(1).unwrap_or("").trim();
            let disc = Discipline::parse(disc)
                .ok_or_else(|| malformed(path, i + 2, &format!("unknown discipline {disc:?}")))?;
            map.insert(subject, disc);
        }
        Ok(map)
    }
}

/// University (normalized) -> rank position; lower is better.
#[derive(Debug, Clone, Default)]
pub struct RankingTable {
    entries: HashMap<String, u32>,
}

/// Case and whitespace normalization applied to university names before
/// ranking lookup. No fuzzy matching beyond this.
pub fn normalize_university(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl RankingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, university: &str, rank: u32) {
        self.entries.insert(normalize_university(university), rank);
    }

    pub fn lookup(&self, university: &str) -> Option<u32> {
        self.entries.get(&normalize_university(university)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a `university,rank` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, CorpusError> {
        let mut table = Self::new();
        let mut reader = csv_reader(path)?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| CorpusError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let university = row.get(0).unwrap_or("").trim();
            let rank: u32 = parse_field(&row, 1, path, i + 2)?;
            if rank == 0 {
                return Err(malformed(path, i + 2, "rank must be positive"));
            }
            table.insert(university, rank);
        }
        Ok(table)
    }
}

/// Reads a JSON-lines corpus, one `DocumentRecord` per line, validating id
/// uniqueness and the year range.
pub fn read_corpus(path: &Path) -> Result<Vec<DocumentRecord>, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for line in raw.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocumentRecord =
            serde_json::from_str(line).map_err(|source| CorpusError::Json {
                path: path.display().to_string(),
                source,
            })?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        if !(1900..=2100).contains(&doc.year) {
            return Err(CorpusError::YearOutOfRange {
                id: doc.id,
                year: doc.year,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes records back out as JSON lines (used by the pipeline's staged
/// artifacts).
pub fn write_corpus(path: &Path, docs: &[DocumentRecord]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn first_token(page: &str) -> Option<&str> {
    page.split_whitespace().next()
}

fn is_header_page(page: &str) -> bool {
    match first_token(page) {
        Some(tok) => {
            let tok = tok
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            HEADER_TOKENS.contains(&tok.as_str())
        }
        None => false,
    }
}

fn has_stop_marker(page: &str) -> bool {
    let Some(line) = page.lines().find(|l| !l.trim().is_empty()) else {
        return false;
    };
    let line = line.trim().to_lowercase();
    STOP_MARKERS.iter().any(|m| line.starts_with(m))
}

/// Finds the first page whose first token is an acknowledgement header and
/// returns its text; while the current page runs past `max_page_chars`, the
/// following page is appended too, unless it opens with a front/back-matter
/// stop marker. Pages are joined with a single newline.
pub fn extract_acknowledgement(
    doc: &DocumentRecord,
    max_page_chars: usize,
) -> Result<AcknowledgementText, CorpusError> {
    if doc.pages.is_empty() {
        return Err(CorpusError::EmptyDocument(doc.id.clone()));
    }
    let start = doc
        .pages
        .iter()
        .position(|p| is_header_page(p))
        .ok_or_else(|| CorpusError::NoAcknowledgementFound(doc.id.clone()))?;

    let mut text = doc.pages[start].clone();
    let mut source_pages = vec![start];
    let mut current = start;
    while doc.pages[current].chars().count() > max_page_chars && current + 1 < doc.pages.len() {
        if has_stop_marker(&doc.pages[current + 1]) {
            break;
        }
        current += 1;
        text.push('\n');
        text.push_str(&doc.pages[current]);
        source_pages.push(current);
    }

    Ok(AcknowledgementText {
        doc_id: doc.id.clone(),
        text,
        source_pages,
    })
}

/// Thresholded lookup of the author's first name in the gender table.
pub fn infer_gender(
    first_name: &str,
    table: &NameGenderTable,
    min_prob: f64,
    min_count: u64,
) -> Gender {
    let Some((p_female, count)) = table.lookup(first_name) else {
        return Gender::Unknown;
    };
    if count < min_count {
        return Gender::Unknown;
    }
    if p_female >= min_prob {
        Gender::Female
    } else if (1.0 - p_female) >= min_prob {
        Gender::Male
    } else {
        Gender::Unknown
    }
}

/// First whitespace token of the author name, lowercased; what the gender
/// table is keyed on.
pub fn author_first_name(author_name: &str) -> Option<String> {
    author_name
        .split_whitespace()
        .next()
        .map(|n| n.to_lowercase())
}

/// Majority vote over the disciplines of the document's subjects; ties go to
/// the discipline of the earliest-listed subject among the tied ones.
pub fn map_discipline(subjects: &[String], mapping: &DisciplineMap) -> Discipline {
    let votes: Vec<Discipline> = subjects
        .iter()
        .filter_map(|s| mapping.lookup(s))
        .collect();
    if votes.is_empty() {
        return Discipline::Unknown;
    }
    let mut counts: HashMap<Discipline, usize> = HashMap::new();
    for &d in &votes {
        *counts.entry(d).or_insert(0) += 1;
    }
    let best = *counts.values().max().expect("non-empty votes");
    // first-listed tied discipline wins
    *votes
        .iter()
        .find(|d| counts[d] == best)
        .expect("non-empty votes")
}

/// Publications falling inside the graduation window, inclusive on both ends.
pub fn window_publication_count(pub_years: &[i32], grad_year: i32, half_width: i32) -> u32 {
    pub_years
        .iter()
        .filter(|&&y| (grad_year - half_width..=grad_year + half_width).contains(&y))
        .count() as u32
}

/// Thresholds for gender inference; the table itself carries no policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnrichmentConfig {
    pub gender_min_prob: f64,
    pub gender_min_count: u64,
    pub window_half_width: i32,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        Self {
            gender_min_prob: 0.6,
            gender_min_count: 10,
            window_half_width: 4,
        }
    }
}

/// Derives the enriched record for one document. Pure in the document and the
/// config tables, so re-running produces identical output.
pub fn enrich(
    doc: &DocumentRecord,
    genders: &NameGenderTable,
    disciplines: &DisciplineMap,
    rankings: &RankingTable,
    cfg: &EnrichmentConfig,
) -> EnrichedRecord {
    let gender = match author_first_name(&doc.author_name) {
        Some(first) => infer_gender(&first, genders, cfg.gender_min_prob, cfg.gender_min_count),
        None => Gender::Unknown,
    };
    EnrichedRecord {
        doc_id: doc.id.clone(),
        gender,
        discipline: map_discipline(&doc.subjects, disciplines),
        publication_count: window_publication_count(
            &doc.pub_years,
            doc.year,
            cfg.window_half_width,
        ),
        ranking: rankings.lookup(&doc.university),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CorpusError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| CorpusError::Csv {
            path: path.display().to_string(),
            source,
        })
}

fn malformed(path: &Path, line: usize, message: &str) -> CorpusError {
    CorpusError::Malformed {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

fn parse_field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    path: &Path,
    line: usize,
) -> Result<T, CorpusError> {
    row.get(idx)
        .ok_or_else(|| malformed(path, line, &format!("missing column {idx}")))?
        .trim()
        .parse::<T>()
        .map_err(|_| malformed(path, line, &format!("unparseable column {idx}")))
}
