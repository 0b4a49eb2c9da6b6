//! Text preparation: sentence splitting, token normalization with a
//! suffix-rule lemmatizer, document-frequency n-gram conjoining, and the
//! single-candidate pronoun resolution heuristic.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextPrepError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: malformed lemma rule")]
    BadRule { path: String, line: usize },
}

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: [&str; 9] = [
    "dr.", "prof.", "mr.", "mrs.", "ms.", "st.", "e.g.", "i.e.", "et al.",
];

/// Third-person pronouns eligible for resolution.
const PRONOUNS: [&str; 9] = [
    "he", "she", "him", "her", "his", "hers", "they", "them", "their",
];

/// One sentence of a prepared document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub raw: String,
    /// Token position of this sentence's first token within the document's
    /// concatenated token stream.
    pub start_token_offset: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Self {
            words: words.into_iter().map(|w| w.into()).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, TextPrepError> {
        let raw = std::fs::read_to_string(path).map_err(|source| TextPrepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        ))
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Suffix-rule lemmatizer: explicit exceptions, file-declared suffix rules,
/// then a guarded built-in pass (plural stripping always; -ing/-ed stripping
/// only when the stem is a known corpus word).
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
    suffix_rules: Vec<(String, String)>,
    known: HashSet<String>,
}

impl Lemmatizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self, TextPrepError> {
        let raw = std::fs::read_to_string(path).map_err(|source| TextPrepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut lemma = Self::new();
        for (i, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
                return Err(TextPrepError::BadRule {
                    path: path.display().to_string(),
                    line: i + 1,
                });
            };
            if let Some(suffix) = a.strip_prefix('-') {
                let replacement = b.strip_prefix('-').unwrap_or(b);
                lemma
                    .suffix_rules
                    .push((suffix.to_string(), replacement.to_string()));
            } else {
                lemma.exceptions.insert(a.to_string(), b.to_string());
            }
        }
        Ok(lemma)
    }

    pub fn add_exception(&mut self, word: &str, lemma: &str) {
        self.exceptions.insert(word.to_string(), lemma.to_string());
    }

    /// Installs the corpus vocabulary consulted by the -ing/-ed stem check.
    pub fn with_known<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.known = words.into_iter().map(|w| w.into()).collect();
        self
    }

    fn is_known(&self, w: &str) -> bool {
        self.known.contains(w)
    }

    pub fn lemmatize(&self, word: &str) -> String {
        if let Some(lemma) = self.exceptions.get(word) {
            return lemma.clone();
        }
        for (suffix, replacement) in &self.suffix_rules {
            if word.len() > suffix.len() + 1 {
                if let Some(stem) = word.strip_suffix(suffix.as_str()) {
                    return format!("{stem}{replacement}");
                }
            }
        }
        let n = word.chars().count();
        if let Some(stem) = word.strip_suffix("ing") {
            if n >= 6 && stem.chars().count() >= 3 {
                return self.destem_or_keep(word, stem);
            }
        }
        if let Some(stem) = word.strip_suffix("ed") {
            if n >= 5 && stem.chars().count() >= 3 {
                return self.destem_or_keep(word, stem);
            }
        }
        if word.ends_with("ies") && n >= 5 {
            return format!("{}y", &word[..word.len() - 3]);
        }
        if word.ends_with("sses") {
            return word[..word.len() - 2].to_string();
        }
        if n >= 4
            && ["ches", "shes", "xes", "zes", "oes"]
                .iter()
                .any(|s| word.ends_with(s))
        {
            return word[..word.len() - 2].to_string();
        }
        if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
            return word.to_string();
        }
        if word.ends_with('s') && n >= 4 {
            return word[..word.len() - 1].to_string();
        }
        word.to_string()
    }

    /// -ing/-ed removal: only strip when the resulting stem (possibly
    /// restoring a final 'e' or undoing a doubled consonant) is a known word.
    fn destem_or_keep(&self, word: &str, stem: &str) -> String {
        if self.is_known(stem) {
            return stem.to_string();
        }
        let with_e = format!("{stem}e");
        if self.is_known(&with_e) {
            return with_e;
        }
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
            let undoubled: String = chars[..chars.len() - 1].iter().collect();
            if self.is_known(&undoubled) {
                return undoubled;
            }
        }
        word.to_string()
    }
}

/// Splits text into raw sentences on `.`, `!`, `?` followed by whitespace and
/// a capital (or end of text), guarding known abbreviations. Returns the whole
/// text as one sentence when no boundary is found.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    if text.trim().is_empty() {
        return sentences;
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (byte, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let delim_end = byte + c.len_utf8();
            if !ends_with_abbreviation(&text[..delim_end]) {
                // look past the delimiter for whitespace + capital, or end
                let mut j = i + 1;
                let mut saw_space = false;
                while j < chars.len() && chars[j].1.is_whitespace() {
                    saw_space = true;
                    j += 1;
                }
                let boundary = if j >= chars.len() {
                    true
                } else {
                    saw_space && chars[j].1.is_uppercase()
                };
                if boundary {
                    let raw = text[start..delim_end].trim();
                    if !raw.is_empty() {
                        sentences.push(raw.to_string());
                    }
                    start = if j < chars.len() { chars[j].0 } else { text.len() };
                    i = j;
                    continue;
                }
            }
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

fn ends_with_abbreviation(prefix: &str) -> bool {
    let lower = prefix.to_lowercase();
    ABBREVIATIONS.iter().any(|abbr| {
        if !lower.ends_with(abbr) {
            return false;
        }
        // require a word boundary before the abbreviation
        let before = lower.len() - abbr.len();
        before == 0
            || lower[..before]
                .chars()
                .next_back()
                .map(|c| !c.is_alphabetic())
                .unwrap_or(true)
    })
}

/// Lowercases, strips punctuation and numerals, lemmatizes, and drops
/// stopwords. Hyphens inside words become underscores so multiword lexicon
/// terms like `co-advisor` survive as single tokens; tokens shorter than two
/// characters are dropped.
pub fn tokenize_normalize(
    raw: &str,
    stopwords: &StopwordSet,
    lemmatizer: &Lemmatizer,
) -> Vec<String> {
    raw_tokens(raw)
        .into_iter()
        .map(|t| lemmatizer.lemmatize(&t))
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Surface tokens before lemmatization and stopword filtering; the corpus
/// vocabulary for the lemmatizer's known-word check is built from these.
pub fn raw_tokens(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in raw.chars() {
        if c.is_alphabetic() {
            for lc in c.to_lowercase() {
                current.push(lc);
            }
        } else if c == '-' && !current.is_empty() {
            current.push('_');
        } else {
            flush_token(&mut current, &mut tokens);
        }
    }
    flush_token(&mut current, &mut tokens);
    tokens
}

fn flush_token(current: &mut String, tokens: &mut Vec<String>) {
    if current.is_empty() {
        return;
    }
    let cleaned: String = current
        .split('_')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("_");
    current.clear();
    if cleaned.chars().count() >= 2 {
        tokens.push(cleaned);
    }
}

/// Splits and normalizes one document into indexed sentences with document
/// token offsets.
pub fn prepare_document(
    doc_id: &str,
    text: &str,
    stopwords: &StopwordSet,
    lemmatizer: &Lemmatizer,
) -> Vec<Sentence> {
    let mut sentences: Vec<Sentence> = split_sentences(text)
        .into_iter()
        .enumerate()
        .map(|(index, raw)| Sentence {
            doc_id: doc_id.to_string(),
            index,
            tokens: tokenize_normalize(&raw, stopwords, lemmatizer),
            raw,
            start_token_offset: 0,
        })
        .collect();
    reindex_offsets(&mut sentences);
    sentences
}

/// Recomputes `start_token_offset` after any pass that changes token counts.
pub fn reindex_offsets(sentences: &mut [Sentence]) {
    let mut offset = 0;
    for s in sentences.iter_mut() {
        s.start_token_offset = offset;
        offset += s.tokens.len();
    }
}

/// A qualifying n-gram and its conjoined single-token form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjoinRule {
    pub parts: Vec<String>,
    pub joined: String,
    pub doc_frequency: usize,
}

/// Builds conjoin rules from per-document token streams. A candidate n-gram
/// qualifies when its document frequency reaches `min_doc_freq` and at least
/// `ratio` times the smallest document frequency among its unigram parts;
/// each document casts a single vote per term.
pub fn build_conjoin_rules(
    docs: &[Vec<Vec<String>>],
    max_n: usize,
    min_doc_freq: usize,
    ratio: f64,
) -> Vec<ConjoinRule> {
    if max_n < 2 {
        return Vec::new();
    }
    let mut unigram_df: HashMap<String, usize> = HashMap::new();
    let mut ngram_df: HashMap<Vec<String>, usize> = HashMap::new();

    for doc in docs {
        let mut seen_unigrams: HashSet<&String> = HashSet::new();
        let mut seen_ngrams: HashSet<Vec<String>> = HashSet::new();
        for sentence in doc {
            for token in sentence {
                seen_unigrams.insert(token);
            }
            for n in 2..=max_n {
                if sentence.len() < n {
                    continue;
                }
                for window in sentence.windows(n) {
                    seen_ngrams.insert(window.to_vec());
                }
            }
        }
        for u in seen_unigrams {
            *unigram_df.entry(u.clone()).or_insert(0) += 1;
        }
        for g in seen_ngrams {
            *ngram_df.entry(g).or_insert(0) += 1;
        }
    }

    let mut rules: Vec<ConjoinRule> = ngram_df
        .into_iter()
        .filter(|(parts, df)| {
            if *df < min_doc_freq {
                return false;
            }
            let min_part_df = parts
                .iter()
                .map(|p| unigram_df.get(p).copied().unwrap_or(0))
                .min()
                .unwrap_or(0);
            (*df as f64) >= ratio * (min_part_df as f64)
        })
        .map(|(parts, df)| ConjoinRule {
            joined: parts.join("_"),
            parts,
            doc_frequency: df,
        })
        .collect();

    // longer rules first, then lexicographic, so the set order is stable
    rules.sort_by(|a, b| {
        b.parts
            .len()
            .cmp(&a.parts.len())
            .then_with(|| a.parts.cmp(&b.parts))
    });
    rules
}

/// Lookup structure for greedy leftmost-longest conjoining.
#[derive(Debug, Clone, Default)]
pub struct ConjoinIndex {
    map: HashMap<Vec<String>, String>,
    max_n: usize,
}

impl ConjoinIndex {
    pub fn new(rules: &[ConjoinRule]) -> Self {
        let mut map = HashMap::new();
        let mut max_n = 0;
        for rule in rules {
            max_n = max_n.max(rule.parts.len());
            map.insert(rule.parts.clone(), rule.joined.clone());
        }
        Self { map, max_n }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Greedy leftmost-longest replacement of rule parts by their joined token,
/// iterated to a fixed point so the result is idempotent.
pub fn apply_conjoin(tokens: &[String], index: &ConjoinIndex) -> Vec<String> {
    if index.is_empty() {
        return tokens.to_vec();
    }
    let mut current = tokens.to_vec();
    loop {
        let next = conjoin_pass(&current, index);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn conjoin_pass(tokens: &[String], index: &ConjoinIndex) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let longest = index.max_n.min(tokens.len() - i);
        let mut matched = false;
        for n in (2..=longest).rev() {
            if let Some(joined) = index.map.get(&tokens[i..i + n]) {
                out.push(joined.clone());
                i += n;
                matched = true;
                break;
            }
        }
        if !matched {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Replaces third-person pronouns with the provider term mentioned in the
/// current or preceding sentence, but only when that window contains exactly
/// one distinct provider. `mentions` pairs each sentence index with a
/// provider term detected in it (pre-resolution).
pub fn resolve_pronouns(sentences: &mut [Sentence], mentions: &[(usize, String)]) -> usize {
    let n = sentences.len();
    let mut per_sentence: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); n];
    for (idx, term) in mentions {
        if *idx < n {
            per_sentence[*idx].insert(term.as_str());
        }
    }
    let mut replaced = 0;
    for i in 0..n {
        let mut window: BTreeSet<&str> = per_sentence[i].clone();
        if i > 0 {
            window.extend(per_sentence[i - 1].iter().copied());
        }
        if window.len() != 1 {
            continue;
        }
        let term = window.iter().next().unwrap().to_string();
        for token in sentences[i].tokens.iter_mut() {
            if PRONOUNS.contains(&token.as_str()) {
                *token = term.clone();
                replaced += 1;
            }
        }
    }
    replaced
}
