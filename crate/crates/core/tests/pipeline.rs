//! Pipeline integration: staged artifacts, recovery against the generator's
//! ground truth, determinism of reruns, resumability, and config validation.

mod common;

use std::collections::BTreeMap;

use acknet::pipeline::{run_pipeline, run_stage, Manifest, PipelineError};
use acknet::synth;

#[test]
fn full_run_recovers_planted_structure() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(150);
    let (config, truth) = common::write_corpus_and_config(dir.path(), &spec, 91);
    run_pipeline(&config).expect("pipeline completes");

    // every stage directory materialized
    for (i, stage) in acknet::pipeline::STAGES.iter().enumerate() {
        let stage_dir = config.out_dir.join(format!("{:02}_{stage}", i + 1));
        assert!(stage_dir.is_dir(), "missing {}", stage_dir.display());
    }

    // detected mention tallies equal the generator's planted tallies exactly:
    // the synthetic vocabulary is normalization-stable and pronoun-free, so
    // detection is lossless
    let (_, mention_rows) = common::read_csv(&config.out_dir.join("04_entities/mentions.csv"));
    let mut per_community: BTreeMap<String, usize> = BTreeMap::new();
    for row in &mention_rows {
        *per_community.entry(row[2].clone()).or_insert(0) += 1;
    }
    for (community, realized_mean) in &truth.realized_mention_means {
        let detected = per_community.get(community).copied().unwrap_or(0);
        let expected = (realized_mean * truth.n_documents as f64).round() as usize;
        assert_eq!(
            detected, expected,
            "{community}: detected {detected}, planted {expected}"
        );
    }

    // community-level sentiment matches the generator's own arithmetic
    let (_, sentiment_rows) =
        common::read_csv(&config.out_dir.join("07_sentiment/community_sentiment.csv"));
    for row in &sentiment_rows {
        let planted = truth.realized_sentiment_means[&row[0]];
        let recovered: f64 = row[1].parse().unwrap();
        assert!(
            (recovered - planted).abs() < 1e-9,
            "{}: {recovered} vs planted {planted}",
            row[0]
        );
    }

    // the graph stage assigns every provider to its lexicon community
    let (_, community_rows) =
        common::read_csv(&config.out_dir.join("06_graph/communities.csv"));
    let found: Vec<String> = community_rows.iter().map(|r| r[1].clone()).collect();
    let lexicon: Vec<String> = community_rows.iter().map(|r| r[2].clone()).collect();
    let ari = acknet::stats::adjusted_rand_index(&found, &lexicon);
    assert!(ari > 0.99, "community recovery ARI {ari}");

    // report datasets exist and carry the documented schemas
    let report = config.out_dir.join("10_report");
    let expect_header = |file: &str, header: &str| {
        let (h, _) = common::read_csv(&report.join(file));
        assert_eq!(h.join(","), header, "{file} schema");
    };
    expect_header("fig1a_nodes.csv", "id,size,community");
    expect_header("fig1a_edges.csv", "source,target,weight");
    expect_header("fig1b_bipartite.csv", "word,community,count");
    expect_header(
        "fig1c_positions.csv",
        "community,bin,mass,mention_count,empty",
    );
    expect_header(
        "fig1d_occurrence_sentiment.csv",
        "provider_id,community,occurrences,mean_sentiment",
    );
    expect_header(
        "fig2_gender.csv",
        "community,metric,gender,mean,ci_low,ci_high,p_value,stars",
    );
    expect_header("fig3a_subject_nodes.csv", "subject,documents");
    expect_header("fig3b_discipline_counts.csv", "discipline,mean,ci_low,ci_high,n_docs");
    expect_header(
        "fig3c_discipline_ratio.csv",
        "discipline,community,ratio,ci_low,ci_high",
    );
    expect_header(
        "fig3d_discipline_gender.csv",
        "discipline,female,male,unknown,n_docs",
    );
    expect_header(
        "fig4a_scatter.csv",
        "doc_id,gender,discipline,norm_sentiment,norm_productivity",
    );
    expect_header(
        "fig4b_shift_sentiment.csv",
        "word,jsd_contribution,direction,p_top,p_bottom",
    );
    expect_header("fig4d_rank_productivity.csv", "university,rank,value,n_docs");
    expect_header("fig4_correlations.csv", "source,metric,spearman_rho,n_institutions");

    // Fig 1c masses sum to 1 per non-empty community
    let (_, positions) = common::read_csv(&report.join("fig1c_positions.csv"));
    let mut mass: BTreeMap<String, f64> = BTreeMap::new();
    for row in &positions {
        *mass.entry(row[0].clone()).or_insert(0.0) += row[2].parse::<f64>().unwrap();
    }
    for (community, total) in mass {
        assert!((total - 1.0).abs() < 1e-9, "{community} masses sum to {total}");
    }

    // the coefficient table carries the expected layout
    let table = std::fs::read_to_string(config.out_dir.join("09_regress/coefficient_table.txt")).unwrap();
    for needle in [
        "Publication Count",
        "all",
        "female",
        "male",
        "soc_hum",
        "academic_count",
        "intercept",
        "Observations",
        "AIC",
        "Standard errors in parentheses",
    ] {
        assert!(table.contains(needle), "coefficient table missing {needle:?}");
    }
    // coefficient rows are followed by a parenthesized standard error
    let se_lines = table.lines().filter(|l| l.trim_start().starts_with('(')).count();
    assert!(se_lines >= 10, "expected SE rows, found {se_lines}");

    // Fig 2 stars must match the emitted p-values
    let (_, fig2) = common::read_csv(&report.join("fig2_gender.csv"));
    for row in &fig2 {
        if row[6].is_empty() {
            continue;
        }
        let p: f64 = row[6].parse().unwrap();
        let expected = if p <= 0.001 {
            "***"
        } else if p <= 0.01 {
            "**"
        } else if p <= 0.05 {
            "*"
        } else {
            "ns"
        };
        assert_eq!(row[7], expected, "stars for p = {p}");
    }
}

#[test]
fn reruns_are_byte_identical_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(60);
    let (config, _) = common::write_corpus_and_config(dir.path(), &spec, 17);

    run_pipeline(&config).expect("first run");
    let first = Manifest::load(&config.out_dir);
    assert_eq!(first.stages.len(), 10);

    // full rerun reproduces every checksum
    run_pipeline(&config).expect("second run");
    let second = Manifest::load(&config.out_dir);
    assert_eq!(first.stages, second.stages);
    assert_eq!(first.config_hash, second.config_hash);

    // delete downstream artifacts and rerun only those stages
    for stage in ["graph", "sentiment", "stats", "regress", "report"] {
        let index = acknet::pipeline::STAGES.iter().position(|s| *s == stage).unwrap();
        let stage_dir = config.out_dir.join(format!("{:02}_{stage}", index + 1));
        std::fs::remove_dir_all(&stage_dir).unwrap();
        run_stage(&config, stage).expect("stage rerun");
    }
    let resumed = Manifest::load(&config.out_dir);
    assert_eq!(first.stages, resumed.stages);
}

#[test]
fn manifest_hash_tracks_config_changes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(5);
    let (config, _) = common::write_corpus_and_config(dir.path(), &spec, 3);
    let base = config.config_hash();

    let mut changed = config.clone();
    changed.seed = 4;
    assert_ne!(base, changed.config_hash());

    let mut changed = config.clone();
    changed.embedding.dim = 64;
    assert_ne!(base, changed.config_hash());

    assert_eq!(base, config.clone().config_hash());
}

#[test]
fn missing_input_file_fails_validation_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(5);
    let (mut config, _) = common::write_corpus_and_config(dir.path(), &spec, 3);
    config.paths.lexicon = dir.path().join("no_such_lexicon.csv");
    let err = run_pipeline(&config);
    assert!(matches!(err, Err(PipelineError::Config(_))));
    assert!(!config.out_dir.exists(), "nothing should be written");
}

#[test]
fn stage_errors_name_missing_predecessors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(5);
    let (config, _) = common::write_corpus_and_config(dir.path(), &spec, 3);
    let err = run_stage(&config, "entities");
    match err {
        Err(PipelineError::MissingStage(_, stage)) => assert_eq!(stage, "prep"),
        other => panic!("expected MissingStage, got {other:?}"),
    }
}

#[test]
fn deterministic_seed_changes_change_outputs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(40);
    let (config_a, _) = common::write_corpus_and_config(dir_a.path(), &spec, 5);
    let (mut config_b, _) = common::write_corpus_and_config(dir_b.path(), &spec, 5);
    config_b.seed = 6;
    run_pipeline(&config_a).unwrap();
    run_pipeline(&config_b).unwrap();
    let va = std::fs::read_to_string(config_a.out_dir.join("05_embed/provider_vectors.csv")).unwrap();
    let vb = std::fs::read_to_string(config_b.out_dir.join("05_embed/provider_vectors.csv")).unwrap();
    assert_ne!(va, vb, "different seeds should train different vectors");
}

#[test]
fn external_scores_override_lexicon_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(60);
    let (mut config, _) = common::write_corpus_and_config(dir.path(), &spec, 29);
    run_pipeline(&config).expect("baseline run");
    let baseline =
        std::fs::read_to_string(config.out_dir.join("07_sentiment/community_sentiment.csv"))
            .unwrap();

    // pin every scored sentence to 1.0 through the external override
    let (_, mentions) = common::read_csv(&config.out_dir.join("04_entities/mentions.csv"));
    let mut ext = String::from("doc_id,sentence_index,value\n");
    let mut seen = std::collections::BTreeSet::new();
    for row in &mentions {
        if seen.insert((row[0].clone(), row[3].clone())) {
            ext.push_str(&format!("{},{},1.0\n", row[0], row[3]));
        }
    }
    let ext_path = dir.path().join("external_scores.csv");
    std::fs::write(&ext_path, ext).unwrap();
    config.paths.external_scores = Some(ext_path);
    acknet::pipeline::run_stage(&config, "sentiment").expect("override run");

    let overridden =
        std::fs::read_to_string(config.out_dir.join("07_sentiment/community_sentiment.csv"))
            .unwrap();
    assert_ne!(baseline, overridden);
    let (_, rows) =
        common::read_csv(&config.out_dir.join("07_sentiment/community_sentiment.csv"));
    for row in rows {
        let mean: f64 = row[1].parse().unwrap();
        assert!((mean - 1.0).abs() < 1e-12, "{} mean {mean}", row[0]);
    }
}
