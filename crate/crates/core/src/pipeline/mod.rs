//! End-to-end pipeline: a declarative config, ten resumable stages writing
//! versioned artifacts under the output directory, and a manifest recording
//! the config hash, seed, and per-file checksums.

pub mod artifacts;
mod report;
mod stages;

pub use stages::{run_pipeline, run_stage, STAGES};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embed::EmbeddingVariant;
use crate::regress::Link;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Stage { stage: String, message: String },
    #[error("{path}: {message}")]
    Artifact { path: String, message: String },
    #[error("missing artifact {0}; run the {1} stage first")]
    MissingStage(String, String),
}

pub(crate) fn stage_error(stage: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage: stage.to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputPaths {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub gender_table: PathBuf,
    pub discipline_map: PathBuf,
    pub valence_lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub lemma_rules: PathBuf,
    /// Ranking source name -> CSV path (e.g. cwur, the, qs).
    #[serde(default)]
    pub rankings: BTreeMap<String, PathBuf>,
    /// Optional external `doc_id,sentence_index,value` sentiment scores.
    #[serde(default)]
    pub external_scores: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionKnobs {
    pub max_page_chars: usize,
}

impl Default for ExtractionKnobs {
    fn default() -> Self {
        Self {
            max_page_chars: 1100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentKnobs {
    pub gender_min_prob: f64,
    pub gender_min_count: u64,
    pub window_half_width: i32,
    /// Which ranking source feeds the enriched record (others still appear
    /// in the ranking-correlation outputs).
    pub primary_ranking: String,
}

impl Default for EnrichmentKnobs {
    fn default() -> Self {
        Self {
            gender_min_prob: 0.6,
            gender_min_count: 10,
            window_half_width: 4,
            primary_ranking: "cwur".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TextPrepKnobs {
    pub conjoin_max_n: usize,
    pub conjoin_min_doc_freq: usize,
    pub conjoin_ratio: f64,
}

impl Default for TextPrepKnobs {
    fn default() -> Self {
        Self {
            conjoin_max_n: 3,
            conjoin_min_doc_freq: 50,
            conjoin_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EntitiesKnobs {
    pub min_occurrences: usize,
    pub position_bins: usize,
}

impl Default for EntitiesKnobs {
    fn default() -> Self {
        Self {
            min_occurrences: 50,
            position_bins: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingKnobs {
    pub dim: usize,
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub min_word_count: usize,
    pub variant: EmbeddingVariant,
}

impl Default for EmbeddingKnobs {
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
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphKnobs {
    /// Fixed significance level; when absent the sweep picks the smallest
    /// alpha with full node coverage.
    pub alpha: Option<f64>,
    pub sweep_alphas: Vec<f64>,
    pub clip_negative: bool,
    pub hierarchy_k: usize,
}

impl Default for GraphKnobs {
    fn default() -> Self {
        Self {
            alpha: None,
            sweep_alphas: vec![
                0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9,
            ],
            clip_negative: true,
            hierarchy_k: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapKnobs {
    pub n_resamples: usize,
    pub sample_fraction: f64,
}

impl Default for BootstrapKnobs {
    fn default() -> Self {
        Self {
            n_resamples: 5000,
            sample_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsKnobs {
    pub jsd_min_count: usize,
    /// Quantile defining the extreme groups compared by word shifts.
    pub quartile: f64,
}

impl Default for StatsKnobs {
    fn default() -> Self {
        Self {
            jsd_min_count: 10,
            quartile: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressKnobs {
    pub vif_threshold: f64,
    pub link: Link,
    /// Zero publication counts are lifted to this value before fitting.
    pub zero_shift: f64,
    pub max_iterations: usize,
}

impl Default for RegressKnobs {
    fn default() -> Self {
        Self {
            vif_threshold: 10.0,
            link: Link::Log,
            zero_shift: 1.0,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: InputPaths,
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Keep every stage single-threaded and seeded; the default. Reserved
    /// for a future relaxed mode; all current stages are deterministic
    /// either way.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub extraction: ExtractionKnobs,
    #[serde(default)]
    pub enrichment: EnrichmentKnobs,
    #[serde(default)]
    pub textprep: TextPrepKnobs,
    #[serde(default)]
    pub entities: EntitiesKnobs,
    #[serde(default)]
    pub embedding: EmbeddingKnobs,
    #[serde(default)]
    pub graph: GraphKnobs,
    #[serde(default)]
    pub bootstrap: BootstrapKnobs,
    #[serde(default)]
    pub stats: StatsKnobs,
    #[serde(default)]
    pub regress: RegressKnobs,
}

fn default_seed() -> u64 {
    42
}

fn default_true() -> bool {
    true
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig = toml::from_str(&raw)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        // relative input paths resolve against the config file's directory
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.lexicon);
        fix(&mut self.paths.gender_table);
        fix(&mut self.paths.discipline_map);
        fix(&mut self.paths.valence_lexicon);
        fix(&mut self.paths.stopwords);
        fix(&mut self.paths.lemma_rules);
        for p in self.paths.rankings.values_mut() {
            fix(p);
        }
        if let Some(p) = self.paths.external_scores.as_mut() {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    /// Every referenced file must exist and every knob must be in range.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let must_exist = |p: &Path, what: &str| {
            if p.is_file() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!(
                    "{what} file {} does not exist",
                    p.display()
                )))
            }
        };
        must_exist(&self.paths.corpus, "corpus")?;
        must_exist(&self.paths.lexicon, "lexicon")?;
        must_exist(&self.paths.gender_table, "gender table")?;
        must_exist(&self.paths.discipline_map, "discipline map")?;
        must_exist(&self.paths.valence_lexicon, "valence lexicon")?;
        must_exist(&self.paths.stopwords, "stopword list")?;
        must_exist(&self.paths.lemma_rules, "lemma rules")?;
        for (name, p) in &self.paths.rankings {
            must_exist(p, &format!("ranking {name}"))?;
        }
        if let Some(p) = &self.paths.external_scores {
            must_exist(p, "external scores")?;
        }

        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(PipelineError::Config(msg.to_string()))
            }
        };
        check(self.extraction.max_page_chars > 0, "max_page_chars must be positive")?;
        check(
            (0.5..=1.0).contains(&self.enrichment.gender_min_prob),
            "gender_min_prob must be in [0.5, 1]",
        )?;
        check(self.textprep.conjoin_ratio > 0.0 && self.textprep.conjoin_ratio <= 1.0,
            "conjoin_ratio must be in (0, 1]")?;
        check(self.entities.position_bins >= 1, "position_bins must be >= 1")?;
        check(self.embedding.dim > 0, "embedding dim must be positive")?;
        check(self.embedding.epochs > 0, "embedding epochs must be positive")?;
        check(self.embedding.initial_lr > 0.0, "initial_lr must be positive")?;
        if let Some(alpha) = self.graph.alpha {
            check(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)")?;
        }
        check(!self.graph.sweep_alphas.is_empty(), "sweep_alphas must be non-empty")?;
        check(
            self.graph
                .sweep_alphas
                .windows(2)
                .all(|w| w[0] < w[1]),
            "sweep_alphas must be ascending",
        )?;
        check(self.graph.hierarchy_k >= 1, "hierarchy_k must be >= 1")?;
        check(self.bootstrap.n_resamples > 0, "n_resamples must be positive")?;
        check(
            self.bootstrap.sample_fraction > 0.0 && self.bootstrap.sample_fraction <= 1.0,
            "sample_fraction must be in (0, 1]",
        )?;
        check(
            self.stats.quartile > 0.0 && self.stats.quartile < 0.5,
            "quartile must be in (0, 0.5)",
        )?;
        check(self.regress.vif_threshold > 1.0, "vif_threshold must exceed 1")?;
        check(self.regress.zero_shift > 0.0, "zero_shift must be positive")?;
        check(
            self.paths.rankings.is_empty()
                || self.paths.rankings.contains_key(&self.enrichment.primary_ranking),
            "primary_ranking must name a configured ranking source",
        )?;
        Ok(())
    }

    /// Hash of the full configuration; changes iff any field changes.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex_digest(canonical.as_bytes())
    }

    /// Stage-scoped seed stream so stages draw independent randomness.
    pub fn stage_seed(&self, label: &str) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let mut z = self.seed ^ h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-run record of what was produced: config hash, seed, and the checksum
/// of every stage artifact.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, BTreeMap<String, String>>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Manifest {
        let path = out_dir.join("manifest.json");
        std::fs::read_to_string(&path)
            .ok()
            .and_then(|raw| serde_json::from_str(&raw).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| artifacts::io_error(&path, e))
    }
}

/// Records checksums of a stage's freshly written files into the manifest.
pub fn record_stage(
    config: &PipelineConfig,
    stage: &str,
    files: &[PathBuf],
) -> Result<(), PipelineError> {
    let mut manifest = Manifest::load(&config.out_dir);
    manifest.config_hash = config.config_hash();
    manifest.seed = config.seed;
    let mut entries = BTreeMap::new();
    for file in files {
        let bytes = std::fs::read(file).map_err(|e| artifacts::io_error(file, e))?;
        let rel = file
            .strip_prefix(&config.out_dir)
            .unwrap_or(file)
            .display()
            .to_string();
        entries.insert(rel, hex_digest(&bytes));
    }
    manifest.stages.insert(stage.to_string(), entries);
    manifest.save(&config.out_dir)
}
