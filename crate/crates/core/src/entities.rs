//! Support-provider detection: lexicon lookup over normalized tokens,
//! rare-provider pruning, position-in-text profiles, and per-document
//! community statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::Sentence;

#[derive(Debug, Error)]
pub enum EntitiesError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("lexicon has duplicate term {0}")]
    DuplicateTerm(String),
}

/// The five support-provider communities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Community {
    Academic,
    Family,
    Administration,
    FriendsColleagues,
    Spiritual,
}

impl Community {
    pub const ALL: [Community; 5] = [
        Community::Academic,
        Community::Family,
        Community::Administration,
        Community::FriendsColleagues,
        Community::Spiritual,
    ];

    pub fn parse(s: &str) -> Option<Community> {
        match s.trim() {
            "academic" => Some(Community::Academic),
            "family" => Some(Community::Family),
            "administration" => Some(Community::Administration),
            "friends_colleagues" => Some(Community::FriendsColleagues),
            "spiritual" => Some(Community::Spiritual),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Community::Academic => "academic",
            Community::Family => "family",
            Community::Administration => "administration",
            Community::FriendsColleagues => "friends_colleagues",
            Community::Spiritual => "spiritual",
        }
    }

    pub fn index(&self) -> usize {
        Community::ALL.iter().position(|c| c == self).unwrap()
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Term -> (provider id, community). Multiword terms are stored in conjoined
/// underscore form; hyphens are normalized to underscores on load so entries
/// match tokenizer output.
#[derive(Debug, Clone, Default)]
pub struct ProviderLexicon {
    entries: BTreeMap<String, (String, Community)>,
}

fn normalize_term(term: &str) -> String {
    term.trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

impl ProviderLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, term: &str, provider_id: &str, community: Community) -> Result<(), EntitiesError> {
        let term = normalize_term(term);
        if self
            .entries
            .insert(term.clone(), (provider_id.to_string(), community))
            .is_some()
        {
            return Err(EntitiesError::DuplicateTerm(term));
        }
        Ok(())
    }

    pub fn lookup(&self, token: &str) -> Option<(&str, Community)> {
        self.entries.get(token).map(|(id, c)| (id.as_str(), *c))
    }

    pub fn community_of(&self, provider_id: &str) -> Option<Community> {
        self.entries
            .values()
            .find(|(id, _)| id == provider_id)
            .map(|(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Loads a `term,provider_id,community` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, EntitiesError> {
        let mut lexicon = Self::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| EntitiesError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| EntitiesError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let term = row.get(0).unwrap_or("");
            let id = row.get(1).unwrap_or(term);
            let community = row.get(2).unwrap_or("");
            let community =
                Community::parse(community).ok_or_else(|| EntitiesError::Malformed {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: format!("unknown community {community:?}"),
                })?;
            lexicon.insert(term, id, community)?;
        }
        Ok(lexicon)
    }
}

/// One detected support-provider occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub provider_id: String,
    pub community: Community,
    pub sentence_index: usize,
    pub token_offset: usize,
    /// `token_offset / total document tokens`, in [0, 1].
    pub relative_position: f64,
}

/// Scans conjoined, pronoun-resolved sentences for lexicon terms. Each token
/// yields at most one mention.
pub fn detect_mentions(sentences: &[Sentence], lexicon: &ProviderLexicon) -> Vec<Mention> {
    let total_tokens: usize = sentences.iter().map(|s| s.tokens.len()).sum();
    let denom = total_tokens.max(1) as f64;
    let mut mentions = Vec::new();
    for sentence in sentences {
        for (i, token) in sentence.tokens.iter().enumerate() {
            if let Some((provider_id, community)) = lexicon.lookup(token) {
                let token_offset = sentence.start_token_offset + i;
                mentions.push(Mention {
                    doc_id: sentence.doc_id.clone(),
                    provider_id: provider_id.to_string(),
                    community,
                    sentence_index: sentence.index,
                    token_offset,
                    relative_position: token_offset as f64 / denom,
                });
            }
        }
    }
    mentions
}

/// Corpus-wide occurrence counts per provider.
pub fn provider_counts(mentions: &[Mention]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for m in mentions {
        *counts.entry(m.provider_id.clone()).or_insert(0) += 1;
    }
    counts
}

/// Providers whose corpus-wide mention count reaches `min_occurrences`;
/// a provider seen exactly `min_occurrences` times is kept.
pub fn prune_rare_providers(mentions: &[Mention], min_occurrences: usize) -> BTreeSet<String> {
    provider_counts(mentions)
        .into_iter()
        .filter(|(_, n)| *n >= min_occurrences)
        .map(|(id, _)| id)
        .collect()
}

/// Drops mentions whose provider is not in the active set.
pub fn filter_mentions(mentions: Vec<Mention>, active: &BTreeSet<String>) -> Vec<Mention> {
    mentions
        .into_iter()
        .filter(|m| active.contains(&m.provider_id))
        .collect()
}

/// Normalized histogram of mention positions for one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionHistogram {
    pub community: Community,
    pub masses: Vec<f64>,
    pub mention_count: usize,
    pub empty: bool,
}

/// Per-community histograms over relative position; each non-empty histogram
/// sums to 1.
pub fn position_profile(mentions: &[Mention], bins: usize) -> Vec<PositionHistogram> {
    assert!(bins >= 1, "bins must be >= 1");
    let mut histograms: Vec<PositionHistogram> = Community::ALL
        .iter()
        .map(|&community| PositionHistogram {
            community,
            masses: vec![0.0; bins],
            mention_count: 0,
            empty: true,
        })
        .collect();
    for m in mentions {
        let h = &mut histograms[m.community.index()];
        let bin = ((m.relative_position * bins as f64) as usize).min(bins - 1);
        h.masses[bin] += 1.0;
        h.mention_count += 1;
    }
    for h in &mut histograms {
        if h.mention_count > 0 {
            h.empty = false;
            for mass in &mut h.masses {
                *mass /= h.mention_count as f64;
            }
        }
    }
    histograms
}

/// Per-document mention statistics: occurrence counts (default metric),
/// distinct-provider counts, and mentioned flags per community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocCommunityStats {
    pub doc_id: String,
    pub mention_count: [u32; 5],
    pub distinct_count: [u32; 5],
    pub mentioned_flag: [bool; 5],
    pub total_mentions: u32,
}

impl DocCommunityStats {
    pub fn count_of(&self, c: Community) -> u32 {
        self.mention_count[c.index()]
    }

    pub fn flag_of(&self, c: Community) -> bool {
        self.mentioned_flag[c.index()]
    }
}

/// Aggregates pruned mentions per document. Returns one entry per document id
/// found in `mentions`; callers fill in zero rows for unmentioned documents.
pub fn doc_stats(mentions: &[Mention]) -> BTreeMap<String, DocCommunityStats> {
    let mut per_doc: BTreeMap<String, Vec<&Mention>> = BTreeMap::new();
    for m in mentions {
        per_doc.entry(m.doc_id.clone()).or_default().push(m);
    }
    per_doc
        .into_iter()
        .map(|(doc_id, ms)| {
            let mut stats = DocCommunityStats {
                doc_id: doc_id.clone(),
                mention_count: [0; 5],
                distinct_count: [0; 5],
                mentioned_flag: [false; 5],
                total_mentions: 0,
            };
            let mut distinct: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); 5];
            for m in ms {
                let i = m.community.index();
                stats.mention_count[i] += 1;
                stats.mentioned_flag[i] = true;
                stats.total_mentions += 1;
                distinct[i].insert(m.provider_id.as_str());
            }
            for (i, d) in distinct.iter().enumerate() {
                stats.distinct_count[i] = d.len() as u32;
            }
            (doc_id, stats)
        })
        .collect()
}

/// Zero-valued stats row for documents without any pruned mention.
pub fn empty_stats(doc_id: &str) -> DocCommunityStats {
    DocCommunityStats {
        doc_id: doc_id.to_string(),
        mention_count: [0; 5],
        distinct_count: [0; 5],
        mentioned_flag: [false; 5],
        total_mentions: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::reindex_offsets;

    fn lexicon() -> ProviderLexicon {
        let mut lex = ProviderLexicon::new();
        lex.insert("advisor", "advisor", Community::Academic).unwrap();
        lex.insert("mother", "mother", Community::Family).unwrap();
        lex.insert("god", "god", Community::Spiritual).unwrap();
        lex.insert("thesis advisor", "thesis_advisor", Community::Academic)
            .unwrap();
        lex
    }

    fn sentences(token_lists: &[&[&str]]) -> Vec<Sentence> {
        let mut out: Vec<Sentence> = token_lists
            .iter()
            .enumerate()
            .map(|(index, toks)| Sentence {
                doc_id: "d".into(),
                index,
                tokens: toks.iter().map(|s| s.to_string()).collect(),
                raw: toks.join(" "),
                start_token_offset: 0,
            })
            .collect();
        reindex_offsets(&mut out);
        out
    }

    #[test]
    fn detects_exact_tokens() {
        let s = sentences(&[&["thank", "advisor", "mother"]]);
        let ms = detect_mentions(&s, &lexicon());
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].provider_id, "advisor");
        assert_eq!(ms[0].community, Community::Academic);
        assert_eq!(ms[1].provider_id, "mother");
        assert_eq!(ms[1].community, Community::Family);
    }

    #[test]
    fn detects_spiritual_terms_and_conjoined_forms() {
        let s = sentences(&[&["god"], &["thesis_advisor"]]);
        let ms = detect_mentions(&s, &lexicon());
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].community, Community::Spiritual);
        assert_eq!(ms[1].provider_id, "thesis_advisor");
    }

    #[test]
    fn no_lexicon_tokens_no_mentions() {
        let s = sentences(&[&["thank", "everyone"]]);
        assert!(detect_mentions(&s, &lexicon()).is_empty());
    }

    #[test]
    fn relative_positions_span_unit_interval() {
        let s = sentences(&[&["advisor", "x", "y", "z"], &["a", "b", "c", "mother", "w", "q"]]);
        let ms = detect_mentions(&s, &lexicon());
        assert_eq!(ms[0].token_offset, 0);
        assert!((ms[0].relative_position - 0.0).abs() < 1e-12);
        assert_eq!(ms[1].token_offset, 7);
        assert!((ms[1].relative_position - 0.7).abs() < 1e-12);
        for m in &ms {
            assert!((0.0..=1.0).contains(&m.relative_position));
        }
    }

    fn mention_at(provider: &str, community: Community, position: f64) -> Mention {
        Mention {
            doc_id: "d".into(),
            provider_id: provider.into(),
            community,
            sentence_index: 0,
            token_offset: 0,
            relative_position: position,
        }
    }

    #[test]
    fn detection_invariant_under_sentence_reordering() {
        let forward = sentences(&[&["thank", "advisor"], &["mother", "helped"], &["god"]]);
        let mut shuffled_lists: Vec<&[&str]> = vec![&["god"], &["thank", "advisor"], &["mother", "helped"]];
        let backward: Vec<Sentence> = {
            let mut s = sentences(&std::mem::take(&mut shuffled_lists));
            reindex_offsets(&mut s);
            s
        };
        let key = |ms: Vec<Mention>| {
            let mut pairs: Vec<(String, Community)> =
                ms.into_iter().map(|m| (m.provider_id, m.community)).collect();
            pairs.sort();
            pairs
        };
        assert_eq!(
            key(detect_mentions(&forward, &lexicon())),
            key(detect_mentions(&backward, &lexicon()))
        );
    }

    #[test]
    fn pruning_boundary_keeps_exactly_at_threshold() {
        let mut mentions = Vec::new();
        for _ in 0..49 {
            mentions.push(mention_at("advisor", Community::Academic, 0.0));
        }
        for _ in 0..50 {
            mentions.push(mention_at("mother", Community::Family, 0.0));
        }
        let active = prune_rare_providers(&mentions, 50);
        assert!(!active.contains("advisor"));
        assert!(active.contains("mother"));
    }

    #[test]
    fn pruning_threshold_zero_is_identity() {
        let mentions = vec![mention_at("advisor", Community::Academic, 0.0)];
        let active = prune_rare_providers(&mentions, 0);
        assert_eq!(active.len(), 1);
    }

    #[test]
    fn pruning_is_monotone_in_threshold() {
        let mut mentions = Vec::new();
        for (provider, n) in [("a", 3), ("b", 10), ("c", 25)] {
            for _ in 0..n {
                mentions.push(mention_at(provider, Community::Academic, 0.5));
            }
        }
        let mut prev = prune_rare_providers(&mentions, 0);
        for t in 1..30 {
            let cur = prune_rare_providers(&mentions, t);
            assert!(cur.is_subset(&prev));
            prev = cur;
        }
    }

    #[test]
    fn position_histogram_masses() {
        let ms = vec![mention_at("advisor", Community::Academic, 0.0)];
        let profile = position_profile(&ms, 10);
        let academic = &profile[Community::Academic.index()];
        assert!(!academic.empty);
        assert!((academic.masses[0] - 1.0).abs() < 1e-12);

        let ms = vec![
            mention_at("advisor", Community::Academic, 0.05),
            mention_at("advisor", Community::Academic, 0.95),
        ];
        let profile = position_profile(&ms, 10);
        let academic = &profile[Community::Academic.index()];
        assert!((academic.masses[0] - 0.5).abs() < 1e-12);
        assert!((academic.masses[9] - 0.5).abs() < 1e-12);
        assert!((academic.masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(profile[Community::Family.index()].empty);
    }

    #[test]
    fn empty_profile_flagged() {
        let profile = position_profile(&[], 10);
        assert!(profile.iter().all(|h| h.empty));
    }

    #[test]
    fn doc_stats_counts_and_flags() {
        let mentions = vec![
            mention_at("advisor", Community::Academic, 0.1),
            mention_at("advisor", Community::Academic, 0.2),
            mention_at("mother", Community::Family, 0.9),
        ];
        let stats = doc_stats(&mentions);
        let s = &stats["d"];
        assert_eq!(s.count_of(Community::Academic), 2);
        assert_eq!(s.count_of(Community::Family), 1);
        assert_eq!(s.distinct_count[Community::Academic.index()], 1);
        assert!(s.flag_of(Community::Academic));
        assert!(s.flag_of(Community::Family));
        assert!(!s.flag_of(Community::Spiritual));
        assert_eq!(s.total_mentions, 3);
        let total: u32 = s.mention_count.iter().sum();
        assert_eq!(total, s.total_mentions);
    }

    #[test]
    fn lexicon_normalizes_spaces_and_hyphens() {
        let mut lex = ProviderLexicon::new();
        lex.insert("Co-Advisor", "co_advisor", Community::Academic).unwrap();
        assert!(lex.lookup("co_advisor").is_some());
        assert!(lex.insert("co advisor", "x", Community::Academic).is_err());
    }

    #[test]
    fn bundled_lexicon_loads_144_terms() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../data/lexicon.csv");
        let lex = ProviderLexicon::from_csv(&path).unwrap();
        assert_eq!(lex.len(), 144);
        assert_eq!(lex.lookup("god").map(|(_, c)| c), Some(Community::Spiritual));
        assert_eq!(
            lex.lookup("thesis_advisor").map(|(_, c)| c),
            Some(Community::Academic)
        );
        assert_eq!(
            lex.lookup("sounding_board").map(|(_, c)| c),
            Some(Community::FriendsColleagues)
        );
    }
}
