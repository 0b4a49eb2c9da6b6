//! Sentence-level sentiment on a [0, 5] scale with a pluggable scorer.
//! The default scorer averages matched valence-lexicon entries and maps the
//! mean affinely onto the scale; external per-sentence scores can override it.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::{Community, Mention};

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

/// Sentence score in [0, 5] plus how many lexicon terms matched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub value: f64,
    pub matched_terms: usize,
}

/// Word -> valence in [-1, 1].
#[derive(Debug, Clone, Default)]
pub struct ValenceLexicon {
    entries: HashMap<String, f64>,
}

impl ValenceLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, valence: f64) {
        self.entries.insert(word.to_string(), valence.clamp(-1.0, 1.0));
    }

    pub fn valence(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a `word,valence` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, SentimentError> {
        let mut lex = Self::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| SentimentError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| SentimentError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let word = row.get(0).unwrap_or("").trim();
            let valence: f64 = row
                .get(1)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| SentimentError::Malformed {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: "unparseable valence".into(),
                })?;
            if !(-1.0..=1.0).contains(&valence) {
                return Err(SentimentError::Malformed {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: "valence outside [-1,1]".into(),
                });
            }
            lex.insert(word, valence);
        }
        Ok(lex)
    }
}

/// The single-function scorer interface: normalized tokens in, [0, 5] out.
pub trait SentenceScorer {
    fn score(&self, tokens: &[String]) -> SentimentScore;
}

/// Default scorer: `2.5 * (1 + mean valence of matched tokens)`; sentences
/// with no match sit at the neutral midpoint 2.5.
pub struct LexiconScorer<'a> {
    pub lexicon: &'a ValenceLexicon,
}

impl SentenceScorer for LexiconScorer<'_> {
    fn score(&self, tokens: &[String]) -> SentimentScore {
        score_sentence(tokens, self.lexicon)
    }
}

/// A scorer returning a fixed value; used by plug-in contract tests.
pub struct ConstantScorer(pub f64);

impl SentenceScorer for ConstantScorer {
    fn score(&self, _tokens: &[String]) -> SentimentScore {
        SentimentScore {
            value: self.0,
            matched_terms: 0,
        }
    }
}

pub fn score_sentence(tokens: &[String], lexicon: &ValenceLexicon) -> SentimentScore {
    let mut sum = 0.0;
    let mut matched = 0usize;
    for t in tokens {
        if let Some(v) = lexicon.valence(t) {
            sum += v;
            matched += 1;
        }
    }
    let value = if matched == 0 {
        2.5
    } else {
        2.5 * (1.0 + sum / matched as f64)
    };
    SentimentScore {
        value: value.clamp(0.0, 5.0),
        matched_terms: matched,
    }
}

/// Externally supplied sentence scores keyed by (doc id, sentence index);
/// overrides the default scorer where present.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    entries: HashMap<(String, usize), f64>,
}

impl ExternalScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc_id: &str, sentence_index: usize, value: f64) {
        self.entries
            .insert((doc_id.to_string(), sentence_index), value.clamp(0.0, 5.0));
    }

    pub fn lookup(&self, doc_id: &str, sentence_index: usize) -> Option<f64> {
        self.entries
            .get(&(doc_id.to_string(), sentence_index))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a `doc_id,sentence_index,value` CSV.
    pub fn from_csv(path: &Path) -> Result<Self, SentimentError> {
        let mut scores = Self::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| SentimentError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| SentimentError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let bad = |message: &str| SentimentError::Malformed {
                path: path.display().to_string(),
                line: i + 2,
                message: message.into(),
            };
            let doc_id = row.get(0).ok_or_else(|| bad("missing doc_id"))?;
            let idx: usize = row
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad("unparseable sentence index"))?;
            let value: f64 = row
                .get(2)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad("unparseable value"))?;
            if !(0.0..=5.0).contains(&value) {
                return Err(bad("value outside [0,5]"));
            }
            scores.insert(doc_id, idx, value);
        }
        Ok(scores)
    }
}

/// A mention joined with the score of its sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredMention {
    pub mention: Mention,
    pub score: f64,
}

/// Joins each mention to its sentence score: external override first, then
/// the supplied scorer.
pub fn score_mentions<S: SentenceScorer>(
    mentions: &[Mention],
    sentences_by_doc: &BTreeMap<String, Vec<Vec<String>>>,
    scorer: &S,
    external: Option<&ExternalScores>,
) -> Vec<ScoredMention> {
    let mut cache: HashMap<(String, usize), f64> = HashMap::new();
    mentions
        .iter()
        .map(|m| {
            let key = (m.doc_id.clone(), m.sentence_index);
            let score = *cache.entry(key).or_insert_with(|| {
                if let Some(ext) = external {
                    if let Some(v) = ext.lookup(&m.doc_id, m.sentence_index) {
                        return v;
                    }
                }
                let tokens = sentences_by_doc
                    .get(&m.doc_id)
                    .and_then(|doc| doc.get(m.sentence_index))
                    .map(Vec::as_slice)
                    .unwrap_or(&[]);
                scorer.score(&tokens.to_vec()).value
            });
            ScoredMention {
                mention: m.clone(),
                score,
            }
        })
        .collect()
}

/// Unweighted mean of mention-sentence scores per provider.
pub fn aggregate_by_provider(scored: &[ScoredMention]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in scored {
        let e = sums.entry(s.mention.provider_id.clone()).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// Unweighted mean of mention-sentence scores per community. Every mention
/// contributes once, so a community's aggregate is the mention-level mean,
/// not a mean of provider means.
pub fn aggregate_by_community(scored: &[ScoredMention]) -> BTreeMap<Community, f64> {
    let mut sums: BTreeMap<Community, (f64, usize)> = BTreeMap::new();
    for s in scored {
        let e = sums.entry(s.mention.community).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// Unweighted mean of mention-sentence scores per document.
pub fn aggregate_by_document(scored: &[ScoredMention]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in scored {
        let e = sums.entry(s.mention.doc_id.clone()).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// Per-document, per-community mean mention score; used by the gender and
/// discipline comparisons.
pub fn aggregate_by_doc_community(
    scored: &[ScoredMention],
) -> BTreeMap<(String, Community), f64> {
    let mut sums: BTreeMap<(String, Community), (f64, usize)> = BTreeMap::new();
    for s in scored {
        let e = sums
            .entry((s.mention.doc_id.clone(), s.mention.community))
            .or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn lexicon() -> ValenceLexicon {
        let mut lex = ValenceLexicon::new();
        lex.insert("grateful", 0.8);
        lex.insert("love", 1.0);
        lex.insert("struggle", -1.0);
        lex.insert("hard", -0.3);
        lex
    }

    #[test]
    fn affine_map_of_single_valence() {
        let s = score_sentence(&toks(&["grateful"]), &lexicon());
        assert!((s.value - 4.5).abs() < 1e-12);
        assert_eq!(s.matched_terms, 1);
    }

    #[test]
    fn no_match_is_neutral() {
        let s = score_sentence(&toks(&["unscored", "words"]), &lexicon());
        assert!((s.value - 2.5).abs() < 1e-12);
        assert_eq!(s.matched_terms, 0);
    }

    #[test]
    fn opposite_valences_cancel() {
        let s = score_sentence(&toks(&["love", "struggle"]), &lexicon());
        assert!((s.value - 2.5).abs() < 1e-12);
        assert_eq!(s.matched_terms, 2);
    }

    #[test]
    fn scores_stay_in_range_and_monotone() {
        let mut lex = lexicon();
        let base = score_sentence(&toks(&["hard", "grateful"]), &lex).value;
        lex.insert("hard", 0.1); // raise one matched valence
        let raised = score_sentence(&toks(&["hard", "grateful"]), &lex).value;
        assert!(raised > base);
        for words in [&["love", "love"][..], &["struggle"][..], &[][..]] {
            let v = score_sentence(&toks(words), &lex).value;
            assert!((0.0..=5.0).contains(&v));
        }
    }

    fn mention(doc: &str, provider: &str, community: Community, sentence: usize) -> Mention {
        Mention {
            doc_id: doc.into(),
            provider_id: provider.into(),
            community,
            sentence_index: sentence,
            token_offset: 0,
            relative_position: 0.0,
        }
    }

    fn scored(m: Mention, score: f64) -> ScoredMention {
        ScoredMention { mention: m, score }
    }

    #[test]
    fn provider_aggregate_is_mean() {
        let items = vec![
            scored(mention("d1", "advisor", Community::Academic, 0), 4.0),
            scored(mention("d2", "advisor", Community::Academic, 0), 5.0),
        ];
        let agg = aggregate_by_provider(&items);
        assert!((agg["advisor"] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn single_mention_aggregate_is_its_score() {
        let items = vec![scored(mention("d1", "mother", Community::Family, 0), 3.25)];
        let agg = aggregate_by_provider(&items);
        assert!((agg["mother"] - 3.25).abs() < 1e-12);
        assert!(agg.get("advisor").is_none());
    }

    #[test]
    fn community_aggregate_is_mention_level_not_provider_level() {
        // advisor: three mentions at 5.0; mentor: one mention at 1.0.
        // mention-level mean = (5+5+5+1)/4 = 4.0
        // mean of provider means would be (5+1)/2 = 3.0
        let items = vec![
            scored(mention("d1", "advisor", Community::Academic, 0), 5.0),
            scored(mention("d1", "advisor", Community::Academic, 1), 5.0),
            scored(mention("d2", "advisor", Community::Academic, 0), 5.0),
            scored(mention("d2", "mentor", Community::Academic, 1), 1.0),
        ];
        let agg = aggregate_by_community(&items);
        assert!((agg[&Community::Academic] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_scorer_contract() {
        let sentences: BTreeMap<String, Vec<Vec<String>>> = [(
            "d1".to_string(),
            vec![toks(&["whatever", "tokens"]), toks(&["more"])],
        )]
        .into();
        let mentions = vec![
            mention("d1", "advisor", Community::Academic, 0),
            mention("d1", "mother", Community::Family, 1),
        ];
        let scored = score_mentions(&mentions, &sentences, &ConstantScorer(3.75), None);
        let by_provider = aggregate_by_provider(&scored);
        let by_community = aggregate_by_community(&scored);
        let by_document = aggregate_by_document(&scored);
        assert!(by_provider.values().all(|v| (v - 3.75).abs() < 1e-12));
        assert!(by_community.values().all(|v| (v - 3.75).abs() < 1e-12));
        assert!(by_document.values().all(|v| (v - 3.75).abs() < 1e-12));
    }

    #[test]
    fn external_scores_override() {
        let sentences: BTreeMap<String, Vec<Vec<String>>> =
            [("d1".to_string(), vec![toks(&["grateful"])])].into();
        let lex = lexicon();
        let scorer = LexiconScorer { lexicon: &lex };
        let mentions = vec![mention("d1", "advisor", Community::Academic, 0)];
        let mut ext = ExternalScores::new();
        ext.insert("d1", 0, 1.25);
        let with_ext = score_mentions(&mentions, &sentences, &scorer, Some(&ext));
        assert!((with_ext[0].score - 1.25).abs() < 1e-12);
        let without = score_mentions(&mentions, &sentences, &scorer, None);
        assert!((without[0].score - 4.5).abs() < 1e-12);
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let mut items = vec![
            scored(mention("d1", "advisor", Community::Academic, 0), 4.0),
            scored(mention("d2", "advisor", Community::Academic, 0), 4.4),
            scored(mention("d3", "mentor", Community::Academic, 0), 3.9),
        ];
        let a = aggregate_by_community(&items);
        items.reverse();
        let b = aggregate_by_community(&items);
        for (k, v) in a {
            assert!((v - b[&k]).abs() < 1e-12);
        }
    }
}
