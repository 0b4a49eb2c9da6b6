//! Shared setup for the integration and acceptance suites: generates a
//! synthetic corpus into a scratch directory and builds a pipeline config
//! pointing at the repository's bundled data tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use acknet::corpus;
use acknet::pipeline::PipelineConfig;
use acknet::synth::{self, GroundTruth, SyntheticSpec};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn write_corpus_and_config(
    dir: &Path,
    spec: &SyntheticSpec,
    seed: u64,
) -> (PipelineConfig, GroundTruth) {
    let (docs, truth) = synth::generate(spec, seed).expect("generation succeeds");
    let corpus_path = dir.join("corpus.jsonl");
    corpus::write_corpus(&corpus_path, &docs).expect("corpus written");
    let config = config_for(dir, &corpus_path, seed);
    (config, truth)
}

pub fn config_for(dir: &Path, corpus_path: &Path, seed: u64) -> PipelineConfig {
    let data = data_dir();
    let mut rankings = BTreeMap::new();
    rankings.insert("cwur".to_string(), data.join("rankings_cwur.csv"));
    rankings.insert("the".to_string(), data.join("rankings_the.csv"));
    rankings.insert("qs".to_string(), data.join("rankings_qs.csv"));
    PipelineConfig {
        paths: acknet::pipeline::InputPaths {
            corpus: corpus_path.to_path_buf(),
            lexicon: data.join("lexicon.csv"),
            gender_table: data.join("gender_table.csv"),
            discipline_map: data.join("discipline_map.csv"),
            valence_lexicon: data.join("valence.csv"),
            stopwords: data.join("stopwords.txt"),
            lemma_rules: data.join("lemma_rules.txt"),
            rankings,
            external_scores: None,
        },
        out_dir: dir.join("out"),
        seed,
        deterministic: true,
        extraction: Default::default(),
        enrichment: Default::default(),
        textprep: Default::default(),
        entities: Default::default(),
        embedding: Default::default(),
        graph: Default::default(),
        bootstrap: Default::default(),
        stats: Default::default(),
        regress: Default::default(),
    }
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let raw = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    let mut lines = raw.lines();
    let header: Vec<String> = lines
        .next()
        .expect("non-empty csv")
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}
