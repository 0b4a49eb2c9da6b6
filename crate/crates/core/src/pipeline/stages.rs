//! The ten pipeline stages. Each stage reads the previous stage's artifacts
//! from the output directory, writes its own, and records checksums in the
//! manifest, so a run can be resumed or partially rerun from any point.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::artifacts::{self, fmt_f64, CsvWriter};
use super::{record_stage, report, stage_error, PipelineConfig, PipelineError};
use crate::corpus::{self, Discipline, DocumentRecord, Gender};
use crate::embed::{self, EmbeddingConfig};
use crate::entities::{self, Community, Mention, ProviderLexicon};
use crate::graph;
use crate::regress::{self, DesignMatrix, GlmFit};
use crate::sentiment::{self, ExternalScores, LexiconScorer, ScoredMention, ValenceLexicon};
use crate::stats::{self, BootstrapEstimate};
use crate::textprep::{self, ConjoinIndex, Lemmatizer, Sentence, StopwordSet};

pub const STAGES: [&str; 10] = [
    "ingest",
    "extract",
    "prep",
    "entities",
    "embed",
    "graph",
    "sentiment",
    "stats",
    "regress",
    "report",
];

pub(crate) fn stage_dir(config: &PipelineConfig, name: &str) -> PathBuf {
    let index = STAGES.iter().position(|s| *s == name).expect("known stage");
    config.out_dir.join(format!("{:02}_{name}", index + 1))
}

pub(crate) fn require(path: PathBuf, producing_stage: &str) -> Result<PathBuf, PipelineError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(PipelineError::MissingStage(
            path.display().to_string(),
            producing_stage.to_string(),
        ))
    }
}

/// Runs one named stage against existing upstream artifacts.
pub fn run_stage(config: &PipelineConfig, stage: &str) -> Result<(), PipelineError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| artifacts::io_error(&config.out_dir, e))?;
    let dir = stage_dir(config, stage);
    std::fs::create_dir_all(&dir).map_err(|e| artifacts::io_error(&dir, e))?;
    let files = match stage {
        "ingest" => stage_ingest(config)?,
        "extract" => stage_extract(config)?,
        "prep" => stage_prep(config)?,
        "entities" => stage_entities(config)?,
        "embed" => stage_embed(config)?,
        "graph" => stage_graph(config)?,
        "sentiment" => stage_sentiment(config)?,
        "stats" => stage_stats(config)?,
        "regress" => stage_regress(config)?,
        "report" => report::stage_report(config)?,
        other => {
            return Err(PipelineError::Config(format!("unknown stage {other}")));
        }
    };
    record_stage(config, stage, &files)
}

/// Runs every stage in order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<super::Manifest, PipelineError> {
    config.validate()?;
    for stage in STAGES {
        run_stage(config, stage)?;
    }
    Ok(super::Manifest::load(&config.out_dir))
}

// --- stage 1: ingest ---

fn stage_ingest(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "ingest";
    let dir = stage_dir(config, STAGE);
    let mut docs = corpus::read_corpus(&config.paths.corpus).map_err(|e| stage_error(STAGE, e))?;
    docs.sort_by(|a, b| a.id.cmp(&b.id));

    let genders = corpus::NameGenderTable::from_csv(&config.paths.gender_table)
        .map_err(|e| stage_error(STAGE, e))?;
    let disciplines = corpus::DisciplineMap::from_csv(&config.paths.discipline_map)
        .map_err(|e| stage_error(STAGE, e))?;
    let primary = config
        .paths
        .rankings
        .get(&config.enrichment.primary_ranking)
        .map(|p| corpus::RankingTable::from_csv(p))
        .transpose()
        .map_err(|e| stage_error(STAGE, e))?
        .unwrap_or_default();

    let enrichment = corpus::EnrichmentConfig {
        gender_min_prob: config.enrichment.gender_min_prob,
        gender_min_count: config.enrichment.gender_min_count,
        window_half_width: config.enrichment.window_half_width,
    };
    let enriched: BTreeMap<String, corpus::EnrichedRecord> = docs
        .iter()
        .map(|d| {
            (
                d.id.clone(),
                corpus::enrich(d, &genders, &disciplines, &primary, &enrichment),
            )
        })
        .collect();

    let docs_path = dir.join("documents.jsonl");
    corpus::write_corpus(&docs_path, &docs).map_err(|e| stage_error(STAGE, e))?;
    let enriched_path = dir.join("enriched.csv");
    artifacts::write_enriched(&enriched_path, &enriched)?;
    Ok(vec![docs_path, enriched_path])
}

fn read_documents(config: &PipelineConfig) -> Result<Vec<DocumentRecord>, PipelineError> {
    let path = require(stage_dir(config, "ingest").join("documents.jsonl"), "ingest")?;
    corpus::read_corpus(&path).map_err(|e| artifacts::io_error(&path, e))
}

// --- stage 2: extract ---

fn stage_extract(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "extract";
    let dir = stage_dir(config, STAGE);
    let docs = read_documents(config)?;
    let mut acks = Vec::new();
    let mut failures = CsvWriter::new(&["doc_id", "error"]);
    for doc in &docs {
        match corpus::extract_acknowledgement(doc, config.extraction.max_page_chars) {
            Ok(ack) => acks.push(ack),
            Err(e) => failures.row(&[doc.id.clone(), e.to_string()]),
        }
    }
    let acks_path = dir.join("acknowledgements.jsonl");
    artifacts::write_acknowledgements(&acks_path, &acks)?;
    let failures_path = dir.join("extract_failures.csv");
    failures.write(&failures_path)?;
    Ok(vec![acks_path, failures_path])
}

// --- stage 3: prep ---

fn stage_prep(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "prep";
    let dir = stage_dir(config, STAGE);
    let acks_path = require(
        stage_dir(config, "extract").join("acknowledgements.jsonl"),
        "extract",
    )?;
    let acks = artifacts::read_acknowledgements(&acks_path)?;
    let stopwords =
        StopwordSet::from_file(&config.paths.stopwords).map_err(|e| stage_error(STAGE, e))?;
    let lexicon =
        ProviderLexicon::from_csv(&config.paths.lexicon).map_err(|e| stage_error(STAGE, e))?;

    // pass 1: corpus vocabulary for the lemmatizer's known-word check
    let vocab: BTreeSet<String> = acks
        .par_iter()
        .map(|ack| {
            let mut set = BTreeSet::new();
            for raw in textprep::split_sentences(&ack.text) {
                set.extend(textprep::raw_tokens(&raw));
            }
            set
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let lemmatizer = Lemmatizer::from_file(&config.paths.lemma_rules)
        .map_err(|e| stage_error(STAGE, e))?
        .with_known(vocab);

    // pass 2: split and normalize per document
    let mut per_doc: Vec<Vec<Sentence>> = acks
        .par_iter()
        .map(|ack| textprep::prepare_document(&ack.doc_id, &ack.text, &stopwords, &lemmatizer))
        .collect();

    // corpus-wide conjoin rules, then conjoin every sentence
    let token_docs: Vec<Vec<Vec<String>>> = per_doc
        .iter()
        .map(|sentences| sentences.iter().map(|s| s.tokens.clone()).collect())
        .collect();
    let rules = textprep::build_conjoin_rules(
        &token_docs,
        config.textprep.conjoin_max_n,
        config.textprep.conjoin_min_doc_freq,
        config.textprep.conjoin_ratio,
    );
    let index = ConjoinIndex::new(&rules);
    for sentences in per_doc.iter_mut() {
        for s in sentences.iter_mut() {
            s.tokens = textprep::apply_conjoin(&s.tokens, &index);
        }
        textprep::reindex_offsets(sentences);
    }

    // provisional mentions feed the pronoun heuristic
    for sentences in per_doc.iter_mut() {
        let provisional: Vec<(usize, String)> = entities::detect_mentions(sentences, &lexicon)
            .into_iter()
            .map(|m| (m.sentence_index, m.provider_id))
            .collect();
        textprep::resolve_pronouns(sentences, &provisional);
    }

    let all: Vec<Sentence> = per_doc.into_iter().flatten().collect();
    let sentences_path = dir.join("sentences.jsonl");
    artifacts::write_sentences(&sentences_path, &all)?;

    let mut rules_csv = CsvWriter::new(&["parts", "joined", "doc_frequency"]);
    for r in &rules {
        rules_csv.row(&[r.parts.join(" "), r.joined.clone(), r.doc_frequency.to_string()]);
    }
    let rules_path = dir.join("conjoin_rules.csv");
    rules_csv.write(&rules_path)?;
    Ok(vec![sentences_path, rules_path])
}

fn read_sentences_grouped(
    config: &PipelineConfig,
) -> Result<Vec<Vec<Sentence>>, PipelineError> {
    let path = require(stage_dir(config, "prep").join("sentences.jsonl"), "prep")?;
    let all = artifacts::read_sentences(&path)?;
    let mut grouped: BTreeMap<String, Vec<Sentence>> = BTreeMap::new();
    for s in all {
        grouped.entry(s.doc_id.clone()).or_default().push(s);
    }
    Ok(grouped.into_values().collect())
}

// --- stage 4: entities ---

fn stage_entities(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "entities";
    let dir = stage_dir(config, STAGE);
    let lexicon =
        ProviderLexicon::from_csv(&config.paths.lexicon).map_err(|e| stage_error(STAGE, e))?;
    let grouped = read_sentences_grouped(config)?;

    let mut mentions: Vec<Mention> = Vec::new();
    for sentences in &grouped {
        mentions.extend(entities::detect_mentions(sentences, &lexicon));
    }
    let active = entities::prune_rare_providers(&mentions, config.entities.min_occurrences);
    let mentions = entities::filter_mentions(mentions, &active);

    let counts = entities::provider_counts(&mentions);
    let mut active_csv = CsvWriter::new(&["provider_id", "community", "count"]);
    for (provider, count) in &counts {
        let community = lexicon
            .community_of(provider)
            .map(|c| c.as_str().to_string())
            .unwrap_or_default();
        active_csv.row(&[provider.clone(), community, count.to_string()]);
    }

    let mut stats = entities::doc_stats(&mentions);
    for sentences in &grouped {
        if let Some(first) = sentences.first() {
            stats
                .entry(first.doc_id.clone())
                .or_insert_with(|| entities::empty_stats(&first.doc_id));
        }
    }
    let profiles = entities::position_profile(&mentions, config.entities.position_bins);

    let mentions_path = dir.join("mentions.csv");
    artifacts::write_mentions(&mentions_path, &mentions)?;
    let active_path = dir.join("active_providers.csv");
    active_csv.write(&active_path)?;
    let stats_path = dir.join("doc_stats.csv");
    artifacts::write_doc_stats(&stats_path, &stats)?;
    let profiles_path = dir.join("position_profiles.csv");
    artifacts::write_position_profiles(&profiles_path, &profiles)?;
    Ok(vec![mentions_path, active_path, stats_path, profiles_path])
}

fn read_stage_mentions(config: &PipelineConfig) -> Result<Vec<Mention>, PipelineError> {
    let path = require(stage_dir(config, "entities").join("mentions.csv"), "entities")?;
    artifacts::read_mentions(&path)
}

fn read_active_providers(
    config: &PipelineConfig,
) -> Result<BTreeMap<String, (Community, usize)>, PipelineError> {
    let path = require(
        stage_dir(config, "entities").join("active_providers.csv"),
        "entities",
    )?;
    let (_, rows) = artifacts::read_csv_rows(&path)?;
    let mut out = BTreeMap::new();
    for r in rows {
        let community = Community::parse(&r[1])
            .ok_or_else(|| artifacts::io_error(&path, format!("bad community {}", r[1])))?;
        let count: usize = r[2].parse().map_err(|e| artifacts::io_error(&path, e))?;
        out.insert(r[0].clone(), (community, count));
    }
    Ok(out)
}

// --- stage 5: embed ---

fn stage_embed(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "embed";
    let dir = stage_dir(config, STAGE);
    let grouped = read_sentences_grouped(config)?;
    let all: Vec<Sentence> = grouped.into_iter().flatten().collect();
    let mentions = read_stage_mentions(config)?;

    let items = embed::build_training_set(&all, &mentions);
    let knobs = &config.embedding;
    let embed_config = EmbeddingConfig {
        dim: knobs.dim,
        window: knobs.window,
        negative_samples: knobs.negative_samples,
        epochs: knobs.epochs,
        initial_lr: knobs.initial_lr,
        min_lr: knobs.min_lr,
        min_word_count: knobs.min_word_count,
        variant: knobs.variant,
        seed: config.stage_seed("embed"),
    };
    let table = embed::train(&items, &embed_config).map_err(|e| stage_error(STAGE, e))?;

    let active: Vec<String> = read_active_providers(config)?.into_keys().collect();
    let similarity =
        embed::similarity_matrix(&table, &active).map_err(|e| stage_error(STAGE, e))?;

    let vectors_path = dir.join("provider_vectors.csv");
    table
        .write_provider_csv(&vectors_path)
        .map_err(|e| stage_error(STAGE, e))?;
    let similarity_path = dir.join("similarity.csv");
    artifacts::write_similarity(&similarity_path, &similarity)?;
    Ok(vec![vectors_path, similarity_path])
}

// --- stage 6: graph ---

fn write_edge_csv(path: &Path, g: &graph::WeightedGraph) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&["u", "v", "weight"]);
    for e in &g.edges {
        w.row(&[
            g.nodes[e.u].clone(),
            g.nodes[e.v].clone(),
            fmt_f64(e.weight),
        ]);
    }
    w.write(path)
}

fn stage_graph(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "graph";
    let dir = stage_dir(config, STAGE);
    let similarity_path = require(stage_dir(config, "embed").join("similarity.csv"), "embed")?;
    let similarity = artifacts::read_similarity(&similarity_path)?;
    let active = read_active_providers(config)?;
    let counts: BTreeMap<String, usize> = active
        .iter()
        .map(|(p, (_, count))| (p.clone(), *count))
        .collect();

    let full = graph::build_graph(&similarity, &counts, config.graph.clip_negative);
    let full_path = dir.join("full_edges.csv");
    write_edge_csv(&full_path, &full)?;

    let sweep = graph::sweep_alpha(&full, &config.graph.sweep_alphas);
    let alpha = config
        .graph
        .alpha
        .or_else(|| graph::select_alpha(&sweep))
        .unwrap_or_else(|| *config.graph.sweep_alphas.last().expect("non-empty"));
    let mut sweep_csv = CsvWriter::new(&["alpha", "node_coverage", "edge_count", "selected"]);
    for p in &sweep {
        sweep_csv.row(&[
            fmt_f64(p.alpha),
            fmt_f64(p.node_coverage),
            p.edge_count.to_string(),
            (p.alpha == alpha).to_string(),
        ]);
    }
    let sweep_path = dir.join("alpha_sweep.csv");
    sweep_csv.write(&sweep_path)?;

    let backbone = graph::disparity_filter(&full, alpha);
    let backbone_path = dir.join("backbone_edges.csv");
    write_edge_csv(&backbone_path, &backbone)?;

    let partition = graph::girvan_newman(&backbone).map_err(|e| stage_error(STAGE, e))?;
    let mut communities_csv = CsvWriter::new(&["provider_id", "community_index", "lexicon_community"]);
    for (provider, index) in &partition.assignment {
        let lexicon_community = active
            .get(provider)
            .map(|(c, _)| c.as_str().to_string())
            .unwrap_or_default();
        communities_csv.row(&[provider.clone(), index.to_string(), lexicon_community]);
    }
    let communities_path = dir.join("communities.csv");
    communities_csv.write(&communities_path)?;

    let (dendrogram, flat) = graph::hierarchical_clustering(&similarity, config.graph.hierarchy_k);
    let mut hierarchy_csv = CsvWriter::new(&["provider_id", "cluster"]);
    for (provider, cluster) in similarity.providers.iter().zip(&flat) {
        hierarchy_csv.row(&[provider.clone(), cluster.to_string()]);
    }
    let hierarchy_path = dir.join("hierarchy_clusters.csv");
    hierarchy_csv.write(&hierarchy_path)?;
    let mut merges_csv = CsvWriter::new(&["step", "left", "right", "height", "size"]);
    for (i, m) in dendrogram.merges.iter().enumerate() {
        merges_csv.row(&[
            i.to_string(),
            m.left.to_string(),
            m.right.to_string(),
            fmt_f64(m.height),
            m.size.to_string(),
        ]);
    }
    let merges_path = dir.join("hierarchy_merges.csv");
    merges_csv.write(&merges_path)?;

    let docs = read_documents(config)?;
    let subjects = graph::subject_cooccurrence(&docs);
    let mut subject_nodes = CsvWriter::new(&["subject", "documents"]);
    for (name, size) in subjects.nodes.iter().zip(&subjects.sizes) {
        subject_nodes.row(&[name.clone(), size.to_string()]);
    }
    let subject_nodes_path = dir.join("subject_nodes.csv");
    subject_nodes.write(&subject_nodes_path)?;
    let subject_edges_path = dir.join("subject_edges.csv");
    write_edge_csv(&subject_edges_path, &subjects)?;

    let network = serde_json::json!({
        "alpha": alpha,
        "modularity": partition.modularity,
        "n_communities": partition.n_communities,
        "nodes": backbone.nodes.iter().enumerate().map(|(i, n)| {
            serde_json::json!({
                "id": n,
                "size": backbone.sizes[i],
                "community": partition.assignment[n],
            })
        }).collect::<Vec<_>>(),
        "edges": backbone.edges.iter().map(|e| {
            serde_json::json!({
                "source": backbone.nodes[e.u],
                "target": backbone.nodes[e.v],
                "weight": e.weight,
            })
        }).collect::<Vec<_>>(),
    });
    let network_path = dir.join("network.json");
    std::fs::write(
        &network_path,
        serde_json::to_string_pretty(&network).expect("network serializes"),
    )
    .map_err(|e| artifacts::io_error(&network_path, e))?;

    Ok(vec![
        full_path,
        sweep_path,
        backbone_path,
        communities_path,
        hierarchy_path,
        merges_path,
        subject_nodes_path,
        subject_edges_path,
        network_path,
    ])
}

// --- stage 7: sentiment ---

fn stage_sentiment(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "sentiment";
    let dir = stage_dir(config, STAGE);
    let grouped = read_sentences_grouped(config)?;
    let all: Vec<Sentence> = grouped.into_iter().flatten().collect();
    let by_doc = artifacts::sentences_by_doc(&all);
    let mentions = read_stage_mentions(config)?;
    let valence = ValenceLexicon::from_csv(&config.paths.valence_lexicon)
        .map_err(|e| stage_error(STAGE, e))?;
    let external = config
        .paths
        .external_scores
        .as_ref()
        .map(|p| ExternalScores::from_csv(p))
        .transpose()
        .map_err(|e| stage_error(STAGE, e))?;

    let scorer = LexiconScorer { lexicon: &valence };
    let scored = sentiment::score_mentions(&mentions, &by_doc, &scorer, external.as_ref());

    let scores_path = dir.join("mention_scores.csv");
    artifacts::write_scored_mentions(&scores_path, &scored)?;

    let by_provider = sentiment::aggregate_by_provider(&scored);
    let provider_counts: BTreeMap<String, usize> = {
        let mut m = BTreeMap::new();
        for s in &scored {
            *m.entry(s.mention.provider_id.clone()).or_insert(0) += 1;
        }
        m
    };
    let lexicon =
        ProviderLexicon::from_csv(&config.paths.lexicon).map_err(|e| stage_error(STAGE, e))?;
    let mut provider_csv = CsvWriter::new(&["provider_id", "community", "mean_score", "mentions"]);
    for (provider, mean) in &by_provider {
        provider_csv.row(&[
            provider.clone(),
            lexicon
                .community_of(provider)
                .map(|c| c.as_str().to_string())
                .unwrap_or_default(),
            fmt_f64(*mean),
            provider_counts[provider].to_string(),
        ]);
    }
    let provider_path = dir.join("provider_sentiment.csv");
    provider_csv.write(&provider_path)?;

    let by_community = sentiment::aggregate_by_community(&scored);
    let mut community_csv = CsvWriter::new(&["community", "mean_score", "mentions"]);
    for (community, mean) in &by_community {
        let count = scored
            .iter()
            .filter(|s| s.mention.community == *community)
            .count();
        community_csv.row(&[
            community.as_str().into(),
            fmt_f64(*mean),
            count.to_string(),
        ]);
    }
    let community_path = dir.join("community_sentiment.csv");
    community_csv.write(&community_path)?;

    let by_document = sentiment::aggregate_by_document(&scored);
    let mut document_csv = CsvWriter::new(&["doc_id", "mean_score", "mentions"]);
    for (doc, mean) in &by_document {
        let count = scored.iter().filter(|s| s.mention.doc_id == *doc).count();
        document_csv.row(&[doc.clone(), fmt_f64(*mean), count.to_string()]);
    }
    let document_path = dir.join("document_sentiment.csv");
    document_csv.write(&document_path)?;

    Ok(vec![scores_path, provider_path, community_path, document_path])
}

fn read_stage_scored(config: &PipelineConfig) -> Result<Vec<ScoredMention>, PipelineError> {
    let path = require(
        stage_dir(config, "sentiment").join("mention_scores.csv"),
        "sentiment",
    )?;
    artifacts::read_scored_mentions(&path)
}

// --- stage 8: stats ---

/// Everything the statistical comparisons need about one document.
pub(crate) struct DocFrame {
    pub doc_id: String,
    pub gender: Gender,
    pub discipline: Discipline,
    pub publication_count: u32,
    pub university: String,
    pub counts: [u32; 5],
    pub flags: [bool; 5],
    pub total_mentions: u32,
    pub doc_sentiment: Option<f64>,
    pub community_sentiment: [Option<f64>; 5],
}

pub(crate) fn build_doc_frames(config: &PipelineConfig) -> Result<Vec<DocFrame>, PipelineError> {
    let enriched_path = require(stage_dir(config, "ingest").join("enriched.csv"), "ingest")?;
    let enriched = artifacts::read_enriched(&enriched_path)?;
    let stats_path = require(stage_dir(config, "entities").join("doc_stats.csv"), "entities")?;
    let doc_stats = artifacts::read_doc_stats(&stats_path)?;
    let scored = read_stage_scored(config)?;
    let docs = read_documents(config)?;
    let universities: BTreeMap<String, String> = docs
        .iter()
        .map(|d| (d.id.clone(), d.university.clone()))
        .collect();

    let doc_sentiment = sentiment::aggregate_by_document(&scored);
    let doc_community_sentiment = sentiment::aggregate_by_doc_community(&scored);

    // only documents that reached the entities stage carry mention data
    let mut frames = Vec::new();
    for (doc_id, stats) in &doc_stats {
        let Some(record) = enriched.get(doc_id) else {
            continue;
        };
        let mut community_sentiment = [None; 5];
        for c in Community::ALL {
            community_sentiment[c.index()] =
                doc_community_sentiment.get(&(doc_id.clone(), c)).copied();
        }
        frames.push(DocFrame {
            doc_id: doc_id.clone(),
            gender: record.gender,
            discipline: record.discipline,
            publication_count: record.publication_count,
            university: universities.get(doc_id).cloned().unwrap_or_default(),
            counts: stats.mention_count,
            flags: stats.mentioned_flag,
            total_mentions: stats.total_mentions,
            doc_sentiment: doc_sentiment.get(doc_id).copied(),
            community_sentiment,
        });
    }
    Ok(frames)
}

struct EstimateRow {
    group: String,
    metric: String,
    community: String,
    estimate: BootstrapEstimate,
    raw: Vec<f64>,
}

fn bootstrap_row(
    config: &PipelineConfig,
    seed_index: &mut u64,
    group: &str,
    metric: &str,
    community: &str,
    values: Vec<f64>,
) -> Option<EstimateRow> {
    if values.is_empty() {
        return None;
    }
    let seed = config.stage_seed("stats").wrapping_add(*seed_index);
    *seed_index += 1;
    let label = format!("{group}:{community}:{metric}");
    let estimate = stats::bootstrap_mean(
        &label,
        &values,
        config.bootstrap.n_resamples,
        config.bootstrap.sample_fraction,
        seed,
    )
    .ok()?;
    Some(EstimateRow {
        group: group.to_string(),
        metric: metric.to_string(),
        community: community.to_string(),
        estimate,
        raw: values,
    })
}

fn write_estimates(path: &Path, rows: &[EstimateRow]) -> Result<(), PipelineError> {
    let mut w = CsvWriter::new(&[
        "group",
        "metric",
        "community",
        "mean",
        "ci_low",
        "ci_high",
        "n_values",
        "n_resamples",
        "sample_fraction",
    ]);
    for r in rows {
        w.row(&[
            r.group.clone(),
            r.metric.clone(),
            r.community.clone(),
            fmt_f64(r.estimate.mean),
            fmt_f64(r.estimate.ci_low),
            fmt_f64(r.estimate.ci_high),
            r.raw.len().to_string(),
            r.estimate.n_resamples.to_string(),
            fmt_f64(r.estimate.sample_fraction),
        ]);
    }
    w.write(path)
}

fn comparison_row(a: &EstimateRow, b: &EstimateRow) -> Vec<String> {
    let bootstrap_mark = stats::compare_groups(&a.estimate, &b.estimate);
    let raw_mark = stats::welch_t_test(&a.raw, &b.raw);
    vec![
        a.metric.clone(),
        a.community.clone(),
        a.group.clone(),
        b.group.clone(),
        fmt_f64(a.estimate.mean),
        fmt_f64(b.estimate.mean),
        fmt_f64(bootstrap_mark.p_value),
        bootstrap_mark.stars.as_str().into(),
        fmt_f64(raw_mark.p_value),
        raw_mark.stars.as_str().into(),
    ]
}

const COMPARISON_HEADER: [&str; 10] = [
    "metric",
    "community",
    "group_a",
    "group_b",
    "mean_a",
    "mean_b",
    "p_value_bootstrap",
    "stars_bootstrap",
    "p_value_raw",
    "stars_raw",
];

fn stage_stats(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "stats";
    let dir = stage_dir(config, STAGE);
    let frames = build_doc_frames(config)?;
    let mut files = Vec::new();
    let mut seed_index = 0u64;

    // gender estimates and comparisons, per community
    let mut gender_rows: Vec<EstimateRow> = Vec::new();
    for gender in [Gender::Female, Gender::Male] {
        let of_gender: Vec<&DocFrame> = frames.iter().filter(|f| f.gender == gender).collect();
        for community in Community::ALL {
            let i = community.index();
            for (metric, values) in [
                (
                    "mentioned_ratio",
                    of_gender
                        .iter()
                        .map(|f| if f.flags[i] { 1.0 } else { 0.0 })
                        .collect::<Vec<f64>>(),
                ),
                (
                    "mention_count",
                    of_gender.iter().map(|f| f.counts[i] as f64).collect(),
                ),
                (
                    "sentiment",
                    of_gender
                        .iter()
                        .filter_map(|f| f.community_sentiment[i])
                        .collect(),
                ),
            ] {
                if let Some(row) = bootstrap_row(
                    config,
                    &mut seed_index,
                    &gender.to_string(),
                    metric,
                    community.as_str(),
                    values,
                ) {
                    gender_rows.push(row);
                }
            }
        }
        if let Some(row) = bootstrap_row(
            config,
            &mut seed_index,
            &gender.to_string(),
            "total_mentions",
            "all",
            of_gender.iter().map(|f| f.total_mentions as f64).collect(),
        ) {
            gender_rows.push(row);
        }
    }
    let gender_bootstrap_path = dir.join("gender_bootstrap.csv");
    write_estimates(&gender_bootstrap_path, &gender_rows)?;
    files.push(gender_bootstrap_path);

    let mut comparisons = CsvWriter::new(&COMPARISON_HEADER);
    for a in gender_rows.iter().filter(|r| r.group == "female") {
        if let Some(b) = gender_rows
            .iter()
            .find(|r| r.group == "male" && r.metric == a.metric && r.community == a.community)
        {
            comparisons.row(&comparison_row(a, b));
        }
    }
    let gender_comparisons_path = dir.join("gender_comparisons.csv");
    comparisons.write(&gender_comparisons_path)?;
    files.push(gender_comparisons_path);

    // discipline estimates and pairwise comparisons
    let mut discipline_rows: Vec<EstimateRow> = Vec::new();
    for discipline in Discipline::KNOWN {
        let of_disc: Vec<&DocFrame> = frames
            .iter()
            .filter(|f| f.discipline == discipline)
            .collect();
        if of_disc.is_empty() {
            continue;
        }
        if let Some(row) = bootstrap_row(
            config,
            &mut seed_index,
            discipline.as_str(),
            "total_mentions",
            "all",
            of_disc.iter().map(|f| f.total_mentions as f64).collect(),
        ) {
            discipline_rows.push(row);
        }
        for community in Community::ALL {
            let i = community.index();
            if let Some(row) = bootstrap_row(
                config,
                &mut seed_index,
                discipline.as_str(),
                "mentioned_ratio",
                community.as_str(),
                of_disc
                    .iter()
                    .map(|f| if f.flags[i] { 1.0 } else { 0.0 })
                    .collect(),
            ) {
                discipline_rows.push(row);
            }
        }
    }
    let discipline_bootstrap_path = dir.join("discipline_bootstrap.csv");
    write_estimates(&discipline_bootstrap_path, &discipline_rows)?;
    files.push(discipline_bootstrap_path);

    let mut disc_comparisons = CsvWriter::new(&COMPARISON_HEADER);
    for (ai, a) in discipline_rows.iter().enumerate() {
        for b in discipline_rows.iter().skip(ai + 1) {
            if a.metric == b.metric && a.community == b.community && a.group < b.group {
                disc_comparisons.row(&comparison_row(a, b));
            }
        }
    }
    let discipline_comparisons_path = dir.join("discipline_comparisons.csv");
    disc_comparisons.write(&discipline_comparisons_path)?;
    files.push(discipline_comparisons_path);

    // gender share per discipline
    let mut gender_share = CsvWriter::new(&["discipline", "female", "male", "unknown", "n_docs"]);
    for discipline in Discipline::KNOWN {
        let of_disc: Vec<&DocFrame> = frames
            .iter()
            .filter(|f| f.discipline == discipline)
            .collect();
        if of_disc.is_empty() {
            continue;
        }
        let n = of_disc.len() as f64;
        let share = |g: Gender| {
            of_disc.iter().filter(|f| f.gender == g).count() as f64 / n
        };
        gender_share.row(&[
            discipline.as_str().into(),
            fmt_f64(share(Gender::Female)),
            fmt_f64(share(Gender::Male)),
            fmt_f64(share(Gender::Unknown)),
            of_disc.len().to_string(),
        ]);
    }
    let gender_share_path = dir.join("discipline_gender_share.csv");
    gender_share.write(&gender_share_path)?;
    files.push(gender_share_path);

    // group normalization over (gender, discipline)
    let keys: Vec<(Gender, Discipline)> =
        frames.iter().map(|f| (f.gender, f.discipline)).collect();
    let productivity: Vec<f64> = frames.iter().map(|f| f.publication_count as f64).collect();
    let norm_productivity = stats::group_normalize(&productivity, &keys);
    let mentions_total: Vec<f64> = frames.iter().map(|f| f.total_mentions as f64).collect();
    let norm_mentions = stats::group_normalize(&mentions_total, &keys);

    // sentiment is normalized over the subset of documents that have it
    let sentiment_docs: Vec<usize> = frames
        .iter()
        .enumerate()
        .filter(|(_, f)| f.doc_sentiment.is_some())
        .map(|(i, _)| i)
        .collect();
    let sentiment_values: Vec<f64> = sentiment_docs
        .iter()
        .map(|&i| frames[i].doc_sentiment.unwrap())
        .collect();
    let sentiment_keys: Vec<(Gender, Discipline)> =
        sentiment_docs.iter().map(|&i| keys[i]).collect();
    let norm_sentiment = stats::group_normalize(&sentiment_values, &sentiment_keys);
    let mut sentiment_by_doc: BTreeMap<&str, (f64, bool)> = BTreeMap::new();
    for (slot, &i) in sentiment_docs.iter().enumerate() {
        sentiment_by_doc.insert(
            &frames[i].doc_id,
            (norm_sentiment.values[slot], norm_sentiment.degenerate[slot]),
        );
    }

    let mut normalized = CsvWriter::new(&[
        "doc_id",
        "gender",
        "discipline",
        "norm_productivity",
        "degenerate_productivity",
        "norm_mentions",
        "degenerate_mentions",
        "norm_sentiment",
        "degenerate_sentiment",
    ]);
    for (i, f) in frames.iter().enumerate() {
        let (ns, nd) = sentiment_by_doc
            .get(f.doc_id.as_str())
            .map(|(v, d)| (fmt_f64(*v), d.to_string()))
            .unwrap_or_default();
        normalized.row(&[
            f.doc_id.clone(),
            f.gender.to_string(),
            f.discipline.to_string(),
            fmt_f64(norm_productivity.values[i]),
            norm_productivity.degenerate[i].to_string(),
            fmt_f64(norm_mentions.values[i]),
            norm_mentions.degenerate[i].to_string(),
            ns,
            nd,
        ]);
    }
    let normalized_path = dir.join("normalized_scores.csv");
    normalized.write(&normalized_path)?;
    files.push(normalized_path);

    // word shifts between extreme quantiles
    let grouped = read_sentences_grouped(config)?;
    let tokens_by_doc: BTreeMap<String, Vec<String>> = grouped
        .into_iter()
        .filter_map(|sentences| {
            sentences.first().map(|first| {
                let doc = first.doc_id.clone();
                let tokens = sentences.iter().flat_map(|s| s.tokens.clone()).collect();
                (doc, tokens)
            })
        })
        .collect();

    let mut summary = serde_json::Map::new();
    for (name, scores) in [
        (
            "sentiment",
            frames
                .iter()
                .map(|f| sentiment_by_doc.get(f.doc_id.as_str()).map(|(v, _)| *v))
                .collect::<Vec<Option<f64>>>(),
        ),
        (
            "productivity",
            norm_productivity.values.iter().map(|&v| Some(v)).collect(),
        ),
    ] {
        let shift_path = dir.join(format!("word_shift_{name}.csv"));
        let scored_docs: Vec<(usize, f64)> = scores
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (i, x)))
            .collect();
        let mut sorted: Vec<f64> = scored_docs.iter().map(|(_, v)| *v).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut w = CsvWriter::new(&["word", "jsd_contribution", "direction", "p_top", "p_bottom"]);
        if sorted.len() >= 4 {
            let q_low = stats::percentile(&sorted, config.stats.quartile);
            let q_high = stats::percentile(&sorted, 1.0 - config.stats.quartile);
            let collect_tokens = |pick: &dyn Fn(f64) -> bool| -> Vec<String> {
                scored_docs
                    .iter()
                    .filter(|(_, v)| pick(*v))
                    .flat_map(|(i, _)| tokens_by_doc.get(&frames[*i].doc_id).cloned().unwrap_or_default())
                    .collect()
            };
            let top = collect_tokens(&|v| v >= q_high);
            let bottom = collect_tokens(&|v| v <= q_low);
            match stats::jsd_word_shift(&top, &bottom, config.stats.jsd_min_count) {
                Ok(result) => {
                    for s in &result.shifts {
                        w.row(&[
                            s.word.clone(),
                            fmt_f64(s.jsd_contribution),
                            match s.direction {
                                stats::ShiftDirection::GroupA => "top".into(),
                                stats::ShiftDirection::GroupB => "bottom".into(),
                            },
                            fmt_f64(s.p_a),
                            fmt_f64(s.p_b),
                        ]);
                    }
                    summary.insert(
                        name.to_string(),
                        serde_json::json!({
                            "total_jsd": result.total_jsd,
                            "n_words": result.shifts.len(),
                            "top_tokens": top.len(),
                            "bottom_tokens": bottom.len(),
                        }),
                    );
                }
                Err(e) => {
                    summary.insert(
                        name.to_string(),
                        serde_json::json!({ "error": e.to_string() }),
                    );
                }
            }
        } else {
            summary.insert(
                name.to_string(),
                serde_json::json!({ "error": "too few scored documents" }),
            );
        }
        w.write(&shift_path)?;
        files.push(shift_path);
    }
    let summary_path = dir.join("word_shift_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("serializes"),
    )
    .map_err(|e| artifacts::io_error(&summary_path, e))?;
    files.push(summary_path);

    // per-institution aggregates and rank correlations, per ranking source
    let mut institution_csv = CsvWriter::new(&[
        "source",
        "university",
        "rank",
        "n_docs",
        "mean_norm_productivity",
        "mean_norm_mentions",
        "mean_norm_sentiment",
    ]);
    let mut correlation_csv = CsvWriter::new(&["source", "metric", "spearman_rho", "n_institutions"]);
    for (source, path) in &config.paths.rankings {
        let table = corpus::RankingTable::from_csv(path).map_err(|e| stage_error(STAGE, e))?;
        let mut per_uni: BTreeMap<String, (u32, Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (i, f) in frames.iter().enumerate() {
            let Some(rank) = table.lookup(&f.university) else {
                continue;
            };
            let entry = per_uni
                .entry(f.university.clone())
                .or_insert((rank, Vec::new(), Vec::new(), Vec::new()));
            entry.1.push(norm_productivity.values[i]);
            entry.2.push(norm_mentions.values[i]);
            if let Some((v, _)) = sentiment_by_doc.get(f.doc_id.as_str()) {
                entry.3.push(*v);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        // (rank, value) pairs per metric, kept aligned even when some
        // institutions lack sentiment-bearing documents
        let mut prods: Vec<(f64, f64)> = Vec::new();
        let mut ments: Vec<(f64, f64)> = Vec::new();
        let mut sents: Vec<(f64, f64)> = Vec::new();
        for (university, (rank, p, m, s)) in &per_uni {
            institution_csv.row(&[
                source.clone(),
                university.clone(),
                rank.to_string(),
                p.len().to_string(),
                fmt_f64(mean(p)),
                fmt_f64(mean(m)),
                if s.is_empty() { String::new() } else { fmt_f64(mean(s)) },
            ]);
            prods.push((*rank as f64, mean(p)));
            ments.push((*rank as f64, mean(m)));
            if !s.is_empty() {
                sents.push((*rank as f64, mean(s)));
            }
        }
        for (metric, pairs) in [
            ("productivity", &prods),
            ("mentions", &ments),
            ("sentiment", &sents),
        ] {
            let ranks: Vec<f64> = pairs.iter().map(|(r, _)| *r).collect();
            let values: Vec<f64> = pairs.iter().map(|(_, v)| *v).collect();
            let rho = if pairs.len() >= 3 {
                stats::spearman(&ranks, &values)
                    .map(fmt_f64)
                    .unwrap_or_else(|_| "nan".into())
            } else {
                "nan".into()
            };
            correlation_csv.row(&[
                source.clone(),
                metric.to_string(),
                rho,
                pairs.len().to_string(),
            ]);
        }
    }
    let institutions_path = dir.join("institution_metrics.csv");
    institution_csv.write(&institutions_path)?;
    files.push(institutions_path);
    let correlations_path = dir.join("ranking_correlations.csv");
    correlation_csv.write(&correlations_path)?;
    files.push(correlations_path);

    Ok(files)
}

// --- stage 9: regress ---

fn family_sentiment_or_neutral(frame: &DocFrame) -> f64 {
    frame.community_sentiment[Community::Family.index()].unwrap_or(2.5)
}

fn build_design(
    frames: &[&DocFrame],
    include_gender: bool,
) -> Result<(DesignMatrix, Vec<String>), PipelineError> {
    let mut names: Vec<&str> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut dropped: Vec<String> = Vec::new();

    let push = |name: &'static str, values: Vec<f64>, names: &mut Vec<&str>, columns: &mut Vec<Vec<f64>>, dropped: &mut Vec<String>| {
        let constant = values.windows(2).all(|w| w[0] == w[1]);
        if constant {
            dropped.push(name.to_string());
        } else {
            names.push(name);
            columns.push(values);
        }
    };

    if include_gender {
        push(
            "gender",
            frames
                .iter()
                .map(|f| if f.gender == Gender::Male { 1.0 } else { 0.0 })
                .collect(),
            &mut names,
            &mut columns,
            &mut dropped,
        );
    }
    for (name, discipline) in [
        ("life_earth", Discipline::LifeEarth),
        ("math_comp", Discipline::MathComp),
        ("phys_eng", Discipline::PhysEng),
        ("soc_hum", Discipline::SocHum),
    ] {
        push(
            name,
            frames
                .iter()
                .map(|f| if f.discipline == discipline { 1.0 } else { 0.0 })
                .collect(),
            &mut names,
            &mut columns,
            &mut dropped,
        );
    }
    push(
        "family_sentiment",
        frames.iter().map(|f| family_sentiment_or_neutral(f)).collect(),
        &mut names,
        &mut columns,
        &mut dropped,
    );
    for (name, community) in [
        ("academic_count", Community::Academic),
        ("family_count", Community::Family),
        ("friends_colleagues_count", Community::FriendsColleagues),
        ("administration_count", Community::Administration),
        ("spiritual_count", Community::Spiritual),
    ] {
        push(
            name,
            frames
                .iter()
                .map(|f| f.counts[community.index()] as f64)
                .collect(),
            &mut names,
            &mut columns,
            &mut dropped,
        );
    }
    let design = DesignMatrix::from_columns(&names, &columns, frames.len())
        .map_err(|e| stage_error("regress", e))?;
    Ok((design, dropped))
}

fn fit_population(
    config: &PipelineConfig,
    frames: &[&DocFrame],
    include_gender: bool,
) -> Result<(GlmFit, regress::VifReport, Vec<String>, usize), PipelineError> {
    let (design, dropped) = build_design(frames, include_gender)?;
    let (pruned, vif_report) = regress::vif_prune(&design, config.regress.vif_threshold)
        .map_err(|e| stage_error("regress", e))?;
    let mut zero_shifted = 0usize;
    let y: Vec<f64> = frames
        .iter()
        .map(|f| {
            if f.publication_count == 0 {
                zero_shifted += 1;
                config.regress.zero_shift
            } else {
                f.publication_count as f64
            }
        })
        .collect();
    let fit = regress::fit_inverse_gaussian_glm_capped(
        &pruned,
        &y,
        config.regress.link,
        config.regress.max_iterations,
    )
    .map_err(|e| stage_error("regress", e))?;
    Ok((fit, vif_report, dropped, zero_shifted))
}

fn glm_json(
    fit: &GlmFit,
    vif: &regress::VifReport,
    dropped: &[String],
    zero_shifted: usize,
) -> serde_json::Value {
    serde_json::json!({
        "fit": fit,
        "vif": vif,
        "dropped_constant_columns": dropped,
        "zero_shifted_responses": zero_shifted,
    })
}

fn stage_regress(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    const STAGE: &str = "regress";
    let dir = stage_dir(config, STAGE);
    let frames = build_doc_frames(config)?;

    // regression populations need a coded gender and a known discipline
    let usable: Vec<&DocFrame> = frames
        .iter()
        .filter(|f| f.gender != Gender::Unknown && f.discipline != Discipline::Unknown)
        .collect();
    if usable.len() < 30 {
        return Err(stage_error(
            STAGE,
            format!("only {} usable documents for regression", usable.len()),
        ));
    }
    let females: Vec<&DocFrame> = usable
        .iter()
        .copied()
        .filter(|f| f.gender == Gender::Female)
        .collect();
    let males: Vec<&DocFrame> = usable
        .iter()
        .copied()
        .filter(|f| f.gender == Gender::Male)
        .collect();

    let mut files = Vec::new();
    let mut fits = Vec::new();
    for (label, population, include_gender) in [
        ("all", &usable, true),
        ("female", &females, false),
        ("male", &males, false),
    ] {
        let (fit, vif, dropped, zero_shifted) = fit_population(config, population, include_gender)?;
        let path = dir.join(format!("glm_{label}.json"));
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&glm_json(&fit, &vif, &dropped, zero_shifted))
                .expect("fit serializes"),
        )
        .map_err(|e| artifacts::io_error(&path, e))?;
        files.push(path);
        fits.push((label.to_string(), fit));
    }

    let table_path = dir.join("coefficient_table.txt");
    std::fs::write(&table_path, report::format_coefficient_table(&fits))
        .map_err(|e| artifacts::io_error(&table_path, e))?;
    files.push(table_path);

    // distribution screening on the all-students response
    let y: Vec<f64> = usable
        .iter()
        .map(|f| {
            if f.publication_count == 0 {
                config.regress.zero_shift
            } else {
                f.publication_count as f64
            }
        })
        .collect();
    let screen = regress::screen_distribution(&y);
    let screen_path = dir.join("distribution_screen.json");
    let screen_json = serde_json::json!({
        "degenerate": screen.degenerate,
        "ranking": screen.ranking,
    });
    std::fs::write(
        &screen_path,
        serde_json::to_string_pretty(&screen_json).expect("serializes"),
    )
    .map_err(|e| artifacts::io_error(&screen_path, e))?;
    files.push(screen_path);
    let mut qq = CsvWriter::new(&["theoretical", "empirical"]);
    for p in &screen.qq {
        qq.row(&[fmt_f64(p.theoretical), fmt_f64(p.empirical)]);
    }
    let qq_path = dir.join("qq.csv");
    qq.write(&qq_path)?;
    files.push(qq_path);

    Ok(files)
}
