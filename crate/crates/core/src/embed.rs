//! Provider embeddings: paragraph-vector training where each sentence that
//! mentions a provider is tagged with it, and the tag vector learns to
//! predict the sentence's words through negative sampling. Cosine
//! similarities between tag vectors become the support-network edge weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::Mention;
use crate::textprep::Sentence;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no training items")]
    NoItems,
    #[error("no token passes the min_word_count filter")]
    EmptyVocabulary,
    #[error("provider {0} has a zero-norm vector")]
    ZeroVector(String),
    #[error("provider {0} missing from embedding table")]
    MissingProvider(String),
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
}

/// Which paragraph-vector flavor to train. The bag-of-words variant trains
/// the tag vector to predict each context word directly; the memory variant
/// averages the tag with window word vectors to predict the center word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingVariant {
    Dbow,
    Dm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub min_word_count: usize,
    pub variant: EmbeddingVariant,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negative_samples: 5,
            epochs: 20,
            initial_lr: 0.025,
            min_lr: 1e-4,
            min_word_count: 5,
            variant: EmbeddingVariant::Dbow,
            seed: 42,
        }
    }
}

/// One tagged context: a provider id and the tokens of a sentence that
/// mentions it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingItem {
    pub tag: String,
    pub tokens: Vec<String>,
}

/// Tags each mention's full sentence with the mention's provider. A sentence
/// mentioning k distinct providers yields k items; repeated mentions of one
/// provider within a sentence are deduplicated.
pub fn build_training_set(sentences: &[Sentence], mentions: &[Mention]) -> Vec<TrainingItem> {
    let mut by_key: HashMap<(&str, usize), &Sentence> = HashMap::new();
    for s in sentences {
        by_key.insert((s.doc_id.as_str(), s.index), s);
    }
    let mut seen: BTreeSet<(String, usize, String)> = BTreeSet::new();
    let mut items = Vec::new();
    for m in mentions {
        let key = (m.doc_id.clone(), m.sentence_index, m.provider_id.clone());
        if !seen.insert(key) {
            continue;
        }
        if let Some(s) = by_key.get(&(m.doc_id.as_str(), m.sentence_index)) {
            items.push(TrainingItem {
                tag: m.provider_id.clone(),
                tokens: s.tokens.clone(),
            });
        }
    }
    items
}

/// Trained vectors: one per provider tag, plus the context-side word vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub providers: BTreeMap<String, Vec<f32>>,
    pub words: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn provider(&self, id: &str) -> Option<&[f32]> {
        self.providers.get(id).map(Vec::as_slice)
    }

    /// Writes `provider_id,d0..d{dim-1}` rows.
    pub fn write_provider_csv(&self, path: &Path) -> Result<(), EmbedError> {
        let mut out = String::from("provider_id");
        for d in 0..self.dim {
            out.push_str(&format!(",d{d}"));
        }
        out.push('\n');
        for (id, v) in &self.providers {
            out.push_str(id);
            for x in v {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads a table written by `write_provider_csv` (context vectors are not
    /// round-tripped; the graph stage only needs provider vectors).
    pub fn read_provider_csv(path: &Path) -> Result<Self, EmbedError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|source| EmbedError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        let dim = reader.headers().map(|h| h.len().saturating_sub(1)).unwrap_or(0);
        let mut providers = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|source| EmbedError::Csv {
                path: path.display().to_string(),
                source,
            })?;
            let id = row.get(0).unwrap_or("").to_string();
            let mut v = Vec::with_capacity(dim);
            for j in 1..row.len() {
                let x: f32 = row
                    .get(j)
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| EmbedError::Malformed {
                        path: path.display().to_string(),
                        line: i + 2,
                        message: format!("unparseable component {j}"),
                    })?;
                v.push(x);
            }
            providers.insert(id, v);
        }
        Ok(Self {
            dim,
            providers,
            words: BTreeMap::new(),
        })
    }
}

struct Vocab {
    index: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<usize>,
}

fn build_vocab(items: &[TrainingItem], min_word_count: usize) -> Vocab {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for item in items {
        for t in &item.tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    // first-seen order keeps index assignment deterministic
    let mut index = HashMap::new();
    let mut words = Vec::new();
    let mut kept_counts = Vec::new();
    for item in items {
        for t in &item.tokens {
            if index.contains_key(t) {
                continue;
            }
            let c = counts[t.as_str()];
            if c >= min_word_count {
                index.insert(t.clone(), words.len());
                words.push(t.clone());
                kept_counts.push(c);
            }
        }
    }
    Vocab {
        index,
        words,
        counts: kept_counts,
    }
}

/// Cumulative-probability table for the unigram^0.75 noise distribution.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[usize]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        let total = acc.max(f64::MIN_POSITIVE);
        for c in &mut cumulative {
            *c /= total;
        }
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c < u)
            .min(self.cumulative.len() - 1)
    }
}

struct Matrix {
    data: Vec<f32>,
    dim: usize,
}

impl Matrix {
    fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            data: vec![0.0; rows * dim],
            dim,
        }
    }

    fn uniform(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let half = 0.5 / dim as f32;
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-half..half))
            .collect();
        Self { data, dim }
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// One negative-sampling step: pushes `input` toward predicting `positive`
/// and away from sampled noise words. Returns the gradient to apply to the
/// input vector(s).
fn sgns_step(
    input: &[f32],
    positive: usize,
    outputs: &mut Matrix,
    noise: &NoiseTable,
    negative_samples: usize,
    lr: f32,
    rng: &mut ChaCha8Rng,
    input_grad: &mut [f32],
) {
    input_grad.iter_mut().for_each(|g| *g = 0.0);
    for d in 0..=negative_samples {
        let (target, label) = if d == 0 {
            (positive, 1.0f32)
        } else {
            let t = noise.sample(rng);
            if t == positive {
                continue;
            }
            (t, 0.0f32)
        };
        let out = outputs.row_mut(target);
        let f = dot(input, out);
        let g = (label - sigmoid(f)) * lr;
        for (ig, o) in input_grad.iter_mut().zip(out.iter()) {
            *ig += g * *o;
        }
        for (o, x) in out.iter_mut().zip(input.iter()) {
            *o += g * *x;
        }
    }
}

struct Trainer {
    vocab: Vocab,
    tags: Vec<String>,
    tag_index: HashMap<String, usize>,
    tag_vecs: Matrix,
    word_inputs: Matrix, // used by the Dm variant
    outputs: Matrix,
    noise: NoiseTable,
    cfg: EmbeddingConfig,
}

impl Trainer {
    fn new(items: &[TrainingItem], cfg: &EmbeddingConfig) -> Result<Self, EmbedError> {
        if items.is_empty() {
            return Err(EmbedError::NoItems);
        }
        let vocab = build_vocab(items, cfg.min_word_count);
        if vocab.words.is_empty() {
            return Err(EmbedError::EmptyVocabulary);
        }
        let mut tag_index = HashMap::new();
        let mut tags = Vec::new();
        for item in items {
            if !tag_index.contains_key(&item.tag) {
                tag_index.insert(item.tag.clone(), tags.len());
                tags.push(item.tag.clone());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tag_vecs = Matrix::uniform(tags.len(), cfg.dim, &mut rng);
        let word_inputs = Matrix::uniform(vocab.words.len(), cfg.dim, &mut rng);
        let outputs = Matrix::zeros(vocab.words.len(), cfg.dim);
        let noise = NoiseTable::new(&vocab.counts);
        Ok(Self {
            vocab,
            tags,
            tag_index,
            tag_vecs,
            word_inputs,
            outputs,
            noise,
            cfg: *cfg,
        })
    }

    fn token_ids(&self, item: &TrainingItem) -> Vec<usize> {
        item.tokens
            .iter()
            .filter_map(|t| self.vocab.index.get(t).copied())
            .collect()
    }

    fn run(&mut self, items: &[TrainingItem], heldout: &[TrainingItem]) -> Vec<f64> {
        let per_pass: usize = items.iter().map(|i| self.token_ids(i).len()).sum();
        let total = (per_pass * self.cfg.epochs).max(1) as f64;
        let mut processed = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(1));
        let eval_negatives = self.fixed_eval_negatives(heldout);
        let mut losses = Vec::with_capacity(self.cfg.epochs);
        let mut grad = vec![0.0f32; self.cfg.dim];
        let mut input = vec![0.0f32; self.cfg.dim];

        for _epoch in 0..self.cfg.epochs {
            for item in items {
                let tag = self.tag_index[&item.tag];
                let ids = self.token_ids(item);
                match self.cfg.variant {
                    EmbeddingVariant::Dbow => {
                        for &word in &ids {
                            let lr = self.lr_at(processed as f64 / total);
                            input.copy_from_slice(self.tag_vecs.row(tag));
                            sgns_step(
                                &input,
                                word,
                                &mut self.outputs,
                                &self.noise,
                                self.cfg.negative_samples,
                                lr,
                                &mut rng,
                                &mut grad,
                            );
                            let row = self.tag_vecs.row_mut(tag);
                            for (x, g) in row.iter_mut().zip(grad.iter()) {
                                *x += *g;
                            }
                            processed += 1;
                        }
                    }
                    EmbeddingVariant::Dm => {
                        for (pos, &word) in ids.iter().enumerate() {
                            let lr = self.lr_at(processed as f64 / total);
                            let lo = pos.saturating_sub(self.cfg.window);
                            let hi = (pos + self.cfg.window + 1).min(ids.len());
                            let ctx: Vec<usize> = (lo..hi)
                                .filter(|&j| j != pos)
                                .map(|j| ids[j])
                                .collect();
                            input.copy_from_slice(self.tag_vecs.row(tag));
                            for &c in &ctx {
                                let row = self.word_inputs.row(c);
                                for (hv, x) in input.iter_mut().zip(row.iter()) {
                                    *hv += *x;
                                }
                            }
                            let scale = 1.0 / (1 + ctx.len()) as f32;
                            input.iter_mut().for_each(|x| *x *= scale);
                            sgns_step(
                                &input,
                                word,
                                &mut self.outputs,
                                &self.noise,
                                self.cfg.negative_samples,
                                lr,
                                &mut rng,
                                &mut grad,
                            );
                            let row = self.tag_vecs.row_mut(tag);
                            for (x, g) in row.iter_mut().zip(grad.iter()) {
                                *x += *g;
                            }
                            for &c in &ctx {
                                let row = self.word_inputs.row_mut(c);
                                for (x, g) in row.iter_mut().zip(grad.iter()) {
                                    *x += *g;
                                }
                            }
                            processed += 1;
                        }
                    }
                }
            }
            losses.push(self.heldout_loss(heldout, &eval_negatives));
        }
        losses
    }

    fn lr_at(&self, progress: f64) -> f32 {
        let lr = self.cfg.initial_lr + (self.cfg.min_lr - self.cfg.initial_lr) * progress;
        lr.max(self.cfg.min_lr) as f32
    }

    /// Negatives for held-out loss are drawn once so epoch-to-epoch loss
    /// changes reflect the model, not the evaluation noise.
    fn fixed_eval_negatives(&self, heldout: &[TrainingItem]) -> Vec<Vec<Vec<usize>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(2));
        heldout
            .iter()
            .map(|item| {
                self.token_ids(item)
                    .iter()
                    .map(|_| {
                        (0..self.cfg.negative_samples)
                            .map(|_| self.noise.sample(&mut rng))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    fn heldout_loss(&self, heldout: &[TrainingItem], negatives: &[Vec<Vec<usize>>]) -> f64 {
        let mut loss = 0.0f64;
        let mut n = 0usize;
        for (item, item_negs) in heldout.iter().zip(negatives) {
            let Some(&tag) = self.tag_index.get(&item.tag) else {
                continue;
            };
            let ids = self.token_ids(item);
            for (idx, &word) in ids.iter().enumerate() {
                let input = match self.cfg.variant {
                    EmbeddingVariant::Dbow => self.tag_vecs.row(tag).to_vec(),
                    EmbeddingVariant::Dm => {
                        let lo = idx.saturating_sub(self.cfg.window);
                        let hi = (idx + self.cfg.window + 1).min(ids.len());
                        let ctx: Vec<usize> =
                            (lo..hi).filter(|&j| j != idx).map(|j| ids[j]).collect();
                        let mut h = self.tag_vecs.row(tag).to_vec();
                        for &c in &ctx {
                            let row = self.word_inputs.row(c);
                            for (hv, x) in h.iter_mut().zip(row.iter()) {
                                *hv += *x;
                            }
                        }
                        let scale = 1.0 / (1 + ctx.len()) as f32;
                        h.iter_mut().for_each(|x| *x *= scale);
                        h
                    }
                };
                let f = dot(&input, self.outputs.row(word)) as f64;
                loss += -ln_sigmoid(f);
                for &neg in &item_negs[idx] {
                    let fn_ = dot(&input, self.outputs.row(neg)) as f64;
                    loss += -ln_sigmoid(-fn_);
                }
                n += 1;
            }
        }
        if n == 0 {
            f64::NAN
        } else {
            loss / n as f64
        }
    }

    fn into_table(self) -> EmbeddingTable {
        let mut providers = BTreeMap::new();
        for (i, tag) in self.tags.iter().enumerate() {
            providers.insert(tag.clone(), self.tag_vecs.row(i).to_vec());
        }
        let mut words = BTreeMap::new();
        for (i, w) in self.vocab.words.iter().enumerate() {
            words.insert(w.clone(), self.outputs.row(i).to_vec());
        }
        EmbeddingTable {
            dim: self.cfg.dim,
            providers,
            words,
        }
    }
}

fn ln_sigmoid(x: f64) -> f64 {
    // numerically stable ln(sigmoid(x))
    if x >= 0.0 {
        -(1.0 + (-x).exp()).ln()
    } else {
        x - (1.0 + x.exp()).ln()
    }
}

/// Trains on all items. Single-threaded; bit-identical across runs for a
/// fixed config.
pub fn train(items: &[TrainingItem], cfg: &EmbeddingConfig) -> Result<EmbeddingTable, EmbedError> {
    let mut trainer = Trainer::new(items, cfg)?;
    trainer.run(items, &[]);
    Ok(trainer.into_table())
}

/// Training diagnostics with a held-out item fraction scored after every
/// epoch.
pub struct TrainReport {
    pub table: EmbeddingTable,
    pub heldout_loss_by_epoch: Vec<f64>,
}

pub fn train_with_holdout(
    items: &[TrainingItem],
    cfg: &EmbeddingConfig,
    holdout_fraction: f64,
) -> Result<TrainReport, EmbedError> {
    if items.is_empty() {
        return Err(EmbedError::NoItems);
    }
    let mut indices: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
    // Fisher-Yates so the held-out split is seed-deterministic
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    let n_holdout = ((items.len() as f64 * holdout_fraction).floor() as usize)
        .min(items.len().saturating_sub(1));
    let heldout: Vec<TrainingItem> = indices[..n_holdout]
        .iter()
        .map(|&i| items[i].clone())
        .collect();
    let train_items: Vec<TrainingItem> = indices[n_holdout..]
        .iter()
        .map(|&i| items[i].clone())
        .collect();

    let mut trainer = Trainer::new(&train_items, cfg)?;
    let losses = trainer.run(&train_items, &heldout);
    Ok(TrainReport {
        table: trainer.into_table(),
        heldout_loss_by_epoch: losses,
    })
}

/// Symmetric cosine-similarity matrix over the given providers; each
/// unordered pair is computed once and the diagonal is exactly 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub providers: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += (*x as f64) * (*x as f64);
        nb += (*y as f64) * (*y as f64);
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub fn similarity_matrix(
    table: &EmbeddingTable,
    providers: &[String],
) -> Result<SimilarityMatrix, EmbedError> {
    let mut vectors = Vec::with_capacity(providers.len());
    for p in providers {
        let v = table
            .provider(p)
            .ok_or_else(|| EmbedError::MissingProvider(p.clone()))?;
        if v.iter().all(|&x| x == 0.0) {
            return Err(EmbedError::ZeroVector(p.clone()));
        }
        vectors.push(v);
    }
    let n = providers.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let c = cosine(vectors[i], vectors[j]).clamp(-1.0, 1.0);
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(SimilarityMatrix {
        providers: providers.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::Community;
    use crate::textprep::reindex_offsets;

    fn sentence(doc: &str, index: usize, tokens: &[&str]) -> Sentence {
        Sentence {
            doc_id: doc.into(),
            index,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            raw: tokens.join(" "),
            start_token_offset: 0,
        }
    }

    fn mention(doc: &str, provider: &str, sentence: usize) -> Mention {
        Mention {
            doc_id: doc.into(),
            provider_id: provider.into(),
            community: Community::Academic,
            sentence_index: sentence,
            token_offset: 0,
            relative_position: 0.0,
        }
    }

    #[test]
    fn training_set_one_item_per_mention() {
        let mut sents = vec![sentence("d", 0, &["thank", "advisor", "mother"])];
        reindex_offsets(&mut sents);
        let mentions = vec![mention("d", "advisor", 0), mention("d", "mother", 0)];
        let items = build_training_set(&sents, &mentions);
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].tag, "advisor");
        assert_eq!(items[1].tag, "mother");
        assert_eq!(items[0].tokens, items[1].tokens);
    }

    #[test]
    fn training_set_skips_unmentioned_and_dedupes() {
        let sents = vec![
            sentence("d", 0, &["advisor", "advisor", "helped"]),
            sentence("d", 1, &["nothing", "here"]),
        ];
        let mentions = vec![mention("d", "advisor", 0), mention("d", "advisor", 0)];
        let items = build_training_set(&sents, &mentions);
        assert_eq!(items.len(), 1);
    }

    fn two_cluster_items(n_per_tag: usize, seed: u64) -> Vec<TrainingItem> {
        let cluster1 = ["research", "guidance", "feedback", "draft", "method", "result"];
        let cluster2 = ["dinner", "warmth", "patience", "evening", "laughter", "walk"];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut items = Vec::new();
        for i in 0..n_per_tag {
            for (tags, vocab) in [(["aa", "bb"], &cluster1), (["cc", "dd"], &cluster2)] {
                let tag = tags[i % 2];
                let tokens: Vec<String> = (0..6)
                    .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                    .collect();
                items.push(TrainingItem {
                    tag: tag.into(),
                    tokens,
                });
            }
        }
        items
    }

    fn small_config() -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 32,
            epochs: 12,
            min_word_count: 2,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let items = two_cluster_items(120, 3);
        let cfg = small_config();
        let a = train(&items, &cfg).unwrap();
        let b = train(&items, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_similarity_is_one_and_matrix_exactly_symmetric() {
        let items = two_cluster_items(60, 5);
        let table = train(&items, &small_config()).unwrap();
        let providers: Vec<String> = table.providers.keys().cloned().collect();
        let sim = similarity_matrix(&table, &providers).unwrap();
        for i in 0..providers.len() {
            assert_eq!(sim.get(i, i), 1.0);
            for j in 0..providers.len() {
                // computed once per unordered pair, so equality is exact
                assert_eq!(sim.get(i, j), sim.get(j, i));
                assert!((-1.0..=1.0).contains(&sim.get(i, j)));
            }
        }
    }

    #[test]
    fn clusters_separate() {
        let items = two_cluster_items(300, 11);
        let table = train(&items, &small_config()).unwrap();
        let names: Vec<String> = ["aa", "bb", "cc", "dd"].map(String::from).to_vec();
        let sim = similarity_matrix(&table, &names).unwrap();
        let within = [sim.get(0, 1), sim.get(2, 3)];
        let cross = [
            sim.get(0, 2),
            sim.get(0, 3),
            sim.get(1, 2),
            sim.get(1, 3),
        ];
        let min_within = within.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_cross = cross.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(
            min_within > max_cross,
            "min within {min_within} should exceed max cross {max_cross}"
        );
    }

    #[test]
    fn dm_variant_trains_and_separates_on_means() {
        let items = two_cluster_items(200, 13);
        let cfg = EmbeddingConfig {
            variant: EmbeddingVariant::Dm,
            epochs: 20,
            ..small_config()
        };
        let table = train(&items, &cfg).unwrap();
        let names: Vec<String> = ["aa", "bb", "cc", "dd"].map(String::from).to_vec();
        let sim = similarity_matrix(&table, &names).unwrap();
        let mean_within = (sim.get(0, 1) + sim.get(2, 3)) / 2.0;
        let mean_cross =
            (sim.get(0, 2) + sim.get(0, 3) + sim.get(1, 2) + sim.get(1, 3)) / 4.0;
        assert!(mean_within > mean_cross);
    }

    #[test]
    fn heldout_loss_decreases() {
        let items = two_cluster_items(200, 17);
        let report = train_with_holdout(&items, &small_config(), 0.05).unwrap();
        let losses = &report.heldout_loss_by_epoch;
        assert!(losses.len() >= 2);
        assert!(
            losses[losses.len() - 1] < losses[0],
            "final loss {} should be below first-epoch loss {}",
            losses[losses.len() - 1],
            losses[0]
        );
    }

    #[test]
    fn empty_vocabulary_error() {
        let items = vec![TrainingItem {
            tag: "a".into(),
            tokens: vec!["once".into()],
        }];
        let cfg = EmbeddingConfig {
            min_word_count: 5,
            ..small_config()
        };
        assert!(matches!(train(&items, &cfg), Err(EmbedError::EmptyVocabulary)));
    }

    #[test]
    fn cosine_reference_values() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!(cosine(&[1.0, 0.0], &[0.0, 2.0]).abs() < 1e-12);
        assert!((cosine(&[1.0, 2.0], &[-1.0, -2.0]) + 1.0).abs() < 1e-12);
        // invariant under positive rescaling
        let a = [0.3f32, -1.2, 0.7];
        let b = [0.9f32, 0.4, -0.2];
        let scaled: Vec<f32> = a.iter().map(|x| x * 37.5).collect();
        assert!((cosine(&a, &b) - cosine(&scaled, &b)).abs() < 1e-6);
    }

    #[test]
    fn zero_vector_is_an_error() {
        let mut table = EmbeddingTable {
            dim: 2,
            providers: BTreeMap::new(),
            words: BTreeMap::new(),
        };
        table.providers.insert("z".into(), vec![0.0, 0.0]);
        let err = similarity_matrix(&table, &["z".into()]);
        assert!(matches!(err, Err(EmbedError::ZeroVector(_))));
    }

    #[test]
    fn provider_csv_round_trip() {
        let items = two_cluster_items(40, 23);
        let table = train(&items, &small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        table.write_provider_csv(&path).unwrap();
        let back = EmbeddingTable::read_provider_csv(&path).unwrap();
        assert_eq!(back.dim, table.dim);
        assert_eq!(back.providers.len(), table.providers.len());
        for (id, v) in &table.providers {
            let w = &back.providers[id];
            for (a, b) in v.iter().zip(w) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}
