//! Typed readers and writers for the staged pipeline artifacts. Everything
//! is plain CSV or JSON lines so stages can be rerun or audited in place.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use super::PipelineError;
use crate::corpus::AcknowledgementText;
use crate::embed::SimilarityMatrix;
use crate::entities::{Community, DocCommunityStats, Mention, PositionHistogram};
use crate::sentiment::ScoredMention;
use crate::textprep::Sentence;

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Artifact {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("artifact serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_error(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let raw = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| io_error(path, e)))
        .collect()
}

/// Minimal CSV writer: headers plus stringified rows. Fields never contain
/// commas or quotes (tokens are `[a-z_]+`, ids are generated), except
/// free-text names which are quoted.
pub struct CsvWriter {
    out: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width mismatch");
        let escaped: Vec<String> = fields
            .iter()
            .map(|f| {
                if f.contains(',') || f.contains('"') || f.contains('\n') {
                    format!("\"{}\"", f.replace('"', "\"\""))
                } else {
                    f.clone()
                }
            })
            .collect();
        self.out.push_str(&escaped.join(","));
        self.out.push('\n');
    }

    pub fn write(self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.out).map_err(|e| io_error(path, e))
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

pub fn read_csv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| io_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io_error(path, e))?;
        rows.push(record.iter().map(String::from).collect());
    }
    Ok((headers, rows))
}

// --- acknowledgements ---

pub fn write_acknowledgements(
    path: &Path,
    acks: &[AcknowledgementText],
) -> Result<(), PipelineError> {
    write_jsonl(path, acks)
}

pub fn read_acknowledgements(path: &Path) -> Result<Vec<AcknowledgementText>, PipelineError> {
    read_jsonl(path)
}

// --- sentences ---

pub fn write_sentences(path: &Path, sentences: &[Sentence]) -> Result<(), PipelineError> {
    write_jsonl(path, sentences)
}

pub fn read_sentences(path: &Path) -> Result<Vec<Sentence>, PipelineError> {
    read_jsonl(path)
}

/// Groups sentence token lists by document for scoring lookups.
pub fn sentences_by_doc(sentences: &[Sentence]) -> BTreeMap<String, Vec<Vec<String>>> {
    let mut map: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for s in sentences {
        let doc = map.entry(s.doc_id.clone()).or_default();
        assert_eq!(doc.len(), s.index, "sentence indices must be dense");
        doc.push(s.tokens.clone());
    }
    map
}

// --- mentions ---

pub fn write_mentions(path: &Path, mentions: &[Mention]) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&[
        "doc_id",
        "provider_id",
        "community",
        "sentence_index",
        "token_offset",
        "relative_position",
    ]);
    for m in mentions {
        w.row(&[
            m.doc_id.clone(),
            m.provider_id.clone(),
            m.community.as_str().into(),
            m.sentence_index.to_string(),
            m.token_offset.to_string(),
            fmt_f64(m.relative_position),
        ]);
    }
    w.write(path)
}

pub fn read_mentions(path: &Path) -> Result<Vec<Mention>, PipelineError> {
    let (_, rows) = read_csv_rows(path)?;
    rows.iter()
        .map(|r| {
            Ok(Mention {
                doc_id: r[0].clone(),
                provider_id: r[1].clone(),
                community: Community::parse(&r[2])
                    .ok_or_else(|| io_error(path, format!("bad community {}", r[2])))?,
                sentence_index: r[3].parse().map_err(|e| io_error(path, e))?,
                token_offset: r[4].parse().map_err(|e| io_error(path, e))?,
                relative_position: r[5].parse().map_err(|e| io_error(path, e))?,
            })
        })
        .collect()
}

// --- doc stats ---

pub fn write_doc_stats(
    path: &Path,
    stats: &BTreeMap<String, DocCommunityStats>,
) -> Result<(), PipelineError> {
    let mut header = vec!["doc_id".to_string()];
    for c in Community::ALL {
        header.push(c.as_str().to_string());
    }
    for c in Community::ALL {
        header.push(format!("{}_distinct", c.as_str()));
    }
    header.push("total".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&header_refs);
    for (doc_id, s) in stats {
        let mut row = vec![doc_id.clone()];
        for c in Community::ALL {
            row.push(s.mention_count[c.index()].to_string());
        }
        for c in Community::ALL {
            row.push(s.distinct_count[c.index()].to_string());
        }
        row.push(s.total_mentions.to_string());
        w.row(&row);
    }
    w.write(path)
}

pub fn read_doc_stats(path: &Path) -> Result<BTreeMap<String, DocCommunityStats>, PipelineError> {
    let (_, rows) = read_csv_rows(path)?;
    let mut out = BTreeMap::new();
    for r in rows {
        let mut stats = crate::entities::empty_stats(&r[0]);
        for (i, c) in Community::ALL.iter().enumerate() {
            stats.mention_count[c.index()] = r[1 + i].parse().map_err(|e| io_error(path, e))?;
            stats.distinct_count[c.index()] =
                r[6 + i].parse().map_err(|e| io_error(path, e))?;
            stats.mentioned_flag[c.index()] = stats.mention_count[c.index()] > 0;
        }
        stats.total_mentions = r[11].parse().map_err(|e| io_error(path, e))?;
        out.insert(r[0].clone(), stats);
    }
    Ok(out)
}

// --- position profiles ---

pub fn write_position_profiles(
    path: &Path,
    profiles: &[PositionHistogram],
) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&["community", "bin", "mass", "mention_count", "empty"]);
    for p in profiles {
        for (bin, mass) in p.masses.iter().enumerate() {
            w.row(&[
                p.community.as_str().into(),
                bin.to_string(),
                fmt_f64(*mass),
                p.mention_count.to_string(),
                p.empty.to_string(),
            ]);
        }
    }
    w.write(path)
}

// --- similarity matrix ---

pub fn write_similarity(path: &Path, sim: &SimilarityMatrix) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&["provider_a", "provider_b", "similarity"]);
    for i in 0..sim.providers.len() {
        for j in (i + 1)..sim.providers.len() {
            w.row(&[
                sim.providers[i].clone(),
                sim.providers[j].clone(),
                fmt_f64(sim.get(i, j)),
            ]);
        }
    }
    w.write(path)
}

pub fn read_similarity(path: &Path) -> Result<SimilarityMatrix, PipelineError> {
    let (_, rows) = read_csv_rows(path)?;
    let mut providers: Vec<String> = Vec::new();
    for r in &rows {
        for name in [&r[0], &r[1]] {
            if !providers.contains(name) {
                providers.push(name.clone());
            }
        }
    }
    providers.sort();
    let index: BTreeMap<&String, usize> = providers.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = providers.len();
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for r in &rows {
        let i = index[&r[0]];
        let j = index[&r[1]];
        let v: f64 = r[2].parse().map_err(|e| io_error(path, e))?;
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(SimilarityMatrix { providers, values })
}

// --- enriched records ---

pub fn write_enriched(
    path: &Path,
    records: &BTreeMap<String, crate::corpus::EnrichedRecord>,
) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&[
        "doc_id",
        "gender",
        "discipline",
        "publication_count",
        "ranking",
    ]);
    for r in records.values() {
        w.row(&[
            r.doc_id.clone(),
            r.gender.to_string(),
            r.discipline.to_string(),
            r.publication_count.to_string(),
            r.ranking.map(|x| x.to_string()).unwrap_or_default(),
        ]);
    }
    w.write(path)
}

pub fn read_enriched(
    path: &Path,
) -> Result<BTreeMap<String, crate::corpus::EnrichedRecord>, PipelineError> {
    use crate::corpus::{Discipline, EnrichedRecord, Gender};
    let (_, rows) = read_csv_rows(path)?;
    let mut out = BTreeMap::new();
    for r in rows {
        let gender = match r[1].as_str() {
            "female" => Gender::Female,
            "male" => Gender::Male,
            _ => Gender::Unknown,
        };
        let discipline = Discipline::parse(&r[2])
            .ok_or_else(|| io_error(path, format!("bad discipline {}", r[2])))?;
        let ranking = if r[4].is_empty() {
            None
        } else {
            Some(r[4].parse().map_err(|e| io_error(path, e))?)
        };
        out.insert(
            r[0].clone(),
            EnrichedRecord {
                doc_id: r[0].clone(),
                gender,
                discipline,
                publication_count: r[3].parse().map_err(|e| io_error(path, e))?,
                ranking,
            },
        );
    }
    Ok(out)
}

// --- scored mentions ---

pub fn write_scored_mentions(path: &Path, scored: &[ScoredMention]) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&[
        "doc_id",
        "provider_id",
        "community",
        "sentence_index",
        "score",
    ]);
    for s in scored {
        w.row(&[
            s.mention.doc_id.clone(),
            s.mention.provider_id.clone(),
            s.mention.community.as_str().into(),
            s.mention.sentence_index.to_string(),
            fmt_f64(s.score),
        ]);
    }
    w.write(path)
}

pub fn read_scored_mentions(path: &Path) -> Result<Vec<ScoredMention>, PipelineError> {
    let (_, rows) = read_csv_rows(path)?;
    rows.iter()
        .map(|r| {
            Ok(ScoredMention {
                mention: Mention {
                    doc_id: r[0].clone(),
                    provider_id: r[1].clone(),
                    community: Community::parse(&r[2])
                        .ok_or_else(|| io_error(path, format!("bad community {}", r[2])))?,
                    sentence_index: r[3].parse().map_err(|e| io_error(path, e))?,
                    token_offset: 0,
                    relative_position: 0.0,
                },
                score: r[4].parse().map_err(|e| io_error(path, e))?,
            })
        })
        .collect()
}
