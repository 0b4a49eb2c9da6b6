//! Figure-dataset emitters: plot-ready CSVs for the network, position
//! profiles, gender/discipline comparisons, normalized scatter, word shifts,
//! and ranking correlations, plus the formatted coefficient table.

use std::collections::BTreeMap;
use std::path::PathBuf;

use super::artifacts::{self, CsvWriter};
use super::stages::{require, stage_dir};
use super::{PipelineConfig, PipelineError};
use crate::entities::Community;
use crate::regress::GlmFit;
use crate::stats::Stars;
use crate::textprep::Sentence;

pub(crate) fn stage_report(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = stage_dir(config, "report");
    let mut files = Vec::new();

    // Fig 1a: backbone network with community labels
    let network_path = require(stage_dir(config, "graph").join("network.json"), "graph")?;
    let network: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&network_path).map_err(|e| artifacts::io_error(&network_path, e))?,
    )
    .map_err(|e| artifacts::io_error(&network_path, e))?;
    let mut nodes = CsvWriter::new(&["id", "size", "community"]);
    for n in network["nodes"].as_array().unwrap_or(&Vec::new()) {
        nodes.row(&[
            n["id"].as_str().unwrap_or_default().to_string(),
            n["size"].to_string(),
            n["community"].to_string(),
        ]);
    }
    let f = dir.join("fig1a_nodes.csv");
    nodes.write(&f)?;
    files.push(f);
    let mut edges = CsvWriter::new(&["source", "target", "weight"]);
    for e in network["edges"].as_array().unwrap_or(&Vec::new()) {
        edges.row(&[
            e["source"].as_str().unwrap_or_default().to_string(),
            e["target"].as_str().unwrap_or_default().to_string(),
            e["weight"].to_string(),
        ]);
    }
    let f = dir.join("fig1a_edges.csv");
    edges.write(&f)?;
    files.push(f);

    // Fig 1b: top words co-occurring with each community's mentions
    files.push(fig1b_bipartite(config, &dir)?);

    // Fig 1c: position profiles (copy of the entities histogram)
    let positions_path = require(
        stage_dir(config, "entities").join("position_profiles.csv"),
        "entities",
    )?;
    let (headers, rows) = artifacts::read_csv_rows(&positions_path)?;
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&header_refs);
    for r in rows {
        w.row(&r);
    }
    let f = dir.join("fig1c_positions.csv");
    w.write(&f)?;
    files.push(f);

    // Fig 1d: provider occurrence vs mean sentiment
    let provider_sentiment_path = require(
        stage_dir(config, "sentiment").join("provider_sentiment.csv"),
        "sentiment",
    )?;
    let (_, rows) = artifacts::read_csv_rows(&provider_sentiment_path)?;
    let mut w = CsvWriter::new(&["provider_id", "community", "occurrences", "mean_sentiment"]);
    for r in rows {
        w.row(&[r[0].clone(), r[1].clone(), r[3].clone(), r[2].clone()]);
    }
    let f = dir.join("fig1d_occurrence_sentiment.csv");
    w.write(&f)?;
    files.push(f);

    // Fig 2: gender estimates joined with significance stars
    files.push(fig2_gender(config, &dir)?);

    // Fig 3a: subject co-occurrence network
    for (src, dst) in [
        ("subject_nodes.csv", "fig3a_subject_nodes.csv"),
        ("subject_edges.csv", "fig3a_subject_edges.csv"),
    ] {
        let path = require(stage_dir(config, "graph").join(src), "graph")?;
        let (headers, rows) = artifacts::read_csv_rows(&path)?;
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let mut w = CsvWriter::new(&header_refs);
        for r in rows {
            w.row(&r);
        }
        let f = dir.join(dst);
        w.write(&f)?;
        files.push(f);
    }

    // Fig 3b/3c: discipline estimates
    let disc_path = require(
        stage_dir(config, "stats").join("discipline_bootstrap.csv"),
        "stats",
    )?;
    let (_, rows) = artifacts::read_csv_rows(&disc_path)?;
    let mut counts = CsvWriter::new(&["discipline", "mean", "ci_low", "ci_high", "n_docs"]);
    let mut ratios = CsvWriter::new(&["discipline", "community", "ratio", "ci_low", "ci_high"]);
    for r in &rows {
        if r[1] == "total_mentions" {
            counts.row(&[r[0].clone(), r[3].clone(), r[4].clone(), r[5].clone(), r[6].clone()]);
        } else if r[1] == "mentioned_ratio" {
            ratios.row(&[r[0].clone(), r[2].clone(), r[3].clone(), r[4].clone(), r[5].clone()]);
        }
    }
    let f = dir.join("fig3b_discipline_counts.csv");
    counts.write(&f)?;
    files.push(f);
    let f = dir.join("fig3c_discipline_ratio.csv");
    ratios.write(&f)?;
    files.push(f);

    // Fig 3d: gender share per discipline (copy)
    let share_path = require(
        stage_dir(config, "stats").join("discipline_gender_share.csv"),
        "stats",
    )?;
    let (headers, rows) = artifacts::read_csv_rows(&share_path)?;
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&header_refs);
    for r in rows {
        w.row(&r);
    }
    let f = dir.join("fig3d_discipline_gender.csv");
    w.write(&f)?;
    files.push(f);

    // Fig 4a: normalized sentiment vs productivity scatter
    let norm_path = require(
        stage_dir(config, "stats").join("normalized_scores.csv"),
        "stats",
    )?;
    let (_, rows) = artifacts::read_csv_rows(&norm_path)?;
    let mut w = CsvWriter::new(&[
        "doc_id",
        "gender",
        "discipline",
        "norm_sentiment",
        "norm_productivity",
    ]);
    for r in &rows {
        if !r[7].is_empty() {
            w.row(&[r[0].clone(), r[1].clone(), r[2].clone(), r[7].clone(), r[3].clone()]);
        }
    }
    let f = dir.join("fig4a_scatter.csv");
    w.write(&f)?;
    files.push(f);

    // Fig 4b/4c: top word shifts
    for (src, dst) in [
        ("word_shift_sentiment.csv", "fig4b_shift_sentiment.csv"),
        ("word_shift_productivity.csv", "fig4c_shift_productivity.csv"),
    ] {
        let path = require(stage_dir(config, "stats").join(src), "stats")?;
        let (headers, rows) = artifacts::read_csv_rows(&path)?;
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let mut w = CsvWriter::new(&header_refs);
        for r in rows.iter().take(30) {
            w.row(r);
        }
        let f = dir.join(dst);
        w.write(&f)?;
        files.push(f);
    }

    // Fig 4d/4e/4f: institution rank vs normalized metrics (primary source)
    let inst_path = require(
        stage_dir(config, "stats").join("institution_metrics.csv"),
        "stats",
    )?;
    let (_, rows) = artifacts::read_csv_rows(&inst_path)?;
    for (metric_col, dst) in [
        (4usize, "fig4d_rank_productivity.csv"),
        (5, "fig4e_rank_mentions.csv"),
        (6, "fig4f_rank_sentiment.csv"),
    ] {
        let mut w = CsvWriter::new(&["university", "rank", "value", "n_docs"]);
        for r in &rows {
            if r[0] == config.enrichment.primary_ranking && !r[metric_col].is_empty() {
                w.row(&[r[1].clone(), r[2].clone(), r[metric_col].clone(), r[3].clone()]);
            }
        }
        let f = dir.join(dst);
        w.write(&f)?;
        files.push(f);
    }
    let corr_path = require(
        stage_dir(config, "stats").join("ranking_correlations.csv"),
        "stats",
    )?;
    let (headers, rows) = artifacts::read_csv_rows(&corr_path)?;
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(&header_refs);
    for r in rows {
        w.row(&r);
    }
    let f = dir.join("fig4_correlations.csv");
    w.write(&f)?;
    files.push(f);

    Ok(files)
}

fn fig1b_bipartite(config: &PipelineConfig, dir: &std::path::Path) -> Result<PathBuf, PipelineError> {
    let sentences_path = require(stage_dir(config, "prep").join("sentences.jsonl"), "prep")?;
    let sentences: Vec<Sentence> = artifacts::read_jsonl(&sentences_path)?;
    let mentions_path = require(stage_dir(config, "entities").join("mentions.csv"), "entities")?;
    let mentions = artifacts::read_mentions(&mentions_path)?;
    let providers: std::collections::BTreeSet<&str> =
        mentions.iter().map(|m| m.provider_id.as_str()).collect();

    let mut by_key: BTreeMap<(&str, usize), &Sentence> = BTreeMap::new();
    for s in &sentences {
        by_key.insert((s.doc_id.as_str(), s.index), s);
    }
    // count words inside mention sentences, attributed to the mention's community
    let mut counts: BTreeMap<(String, Community), usize> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for m in &mentions {
        if let Some(s) = by_key.get(&(m.doc_id.as_str(), m.sentence_index)) {
            for t in &s.tokens {
                if providers.contains(t.as_str()) {
                    continue;
                }
                *counts.entry((t.clone(), m.community)).or_insert(0) += 1;
                *totals.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&String, &usize)> = totals.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let top: Vec<&String> = ranked.into_iter().take(20).map(|(w, _)| w).collect();

    let mut w = CsvWriter::new(&["word", "community", "count"]);
    for word in &top {
        for community in Community::ALL {
            let count = counts.get(&((*word).clone(), community)).copied().unwrap_or(0);
            if count > 0 {
                w.row(&[(*word).clone(), community.as_str().into(), count.to_string()]);
            }
        }
    }
    let f = dir.join("fig1b_bipartite.csv");
    w.write(&f)?;
    Ok(f)
}

fn fig2_gender(config: &PipelineConfig, dir: &std::path::Path) -> Result<PathBuf, PipelineError> {
    let bootstrap_path = require(
        stage_dir(config, "stats").join("gender_bootstrap.csv"),
        "stats",
    )?;
    let comparison_path = require(
        stage_dir(config, "stats").join("gender_comparisons.csv"),
        "stats",
    )?;
    let (_, estimates) = artifacts::read_csv_rows(&bootstrap_path)?;
    let (_, comparisons) = artifacts::read_csv_rows(&comparison_path)?;
    let mark: BTreeMap<(String, String), (String, String)> = comparisons
        .iter()
        .map(|r| {
            (
                (r[0].clone(), r[1].clone()),
                (r[6].clone(), r[7].clone()),
            )
        })
        .collect();
    let mut w = CsvWriter::new(&[
        "community",
        "metric",
        "gender",
        "mean",
        "ci_low",
        "ci_high",
        "p_value",
        "stars",
    ]);
    for r in &estimates {
        let (p, stars) = mark
            .get(&(r[1].clone(), r[2].clone()))
            .cloned()
            .unwrap_or_default();
        w.row(&[
            r[2].clone(),
            r[1].clone(),
            r[0].clone(),
            r[3].clone(),
            r[4].clone(),
            r[5].clone(),
            p,
            stars,
        ]);
    }
    let f = dir.join("fig2_gender.csv");
    w.write(&f)?;
    Ok(f)
}

/// Coefficient table over the three fitted populations, stars from Wald
/// p-values, standard errors in parentheses under each coefficient.
pub(crate) fn format_coefficient_table(fits: &[(String, GlmFit)]) -> String {
    let mut row_names: Vec<String> = Vec::new();
    for (_, fit) in fits {
        for name in &fit.column_names {
            if name != "intercept" && !row_names.contains(name) {
                row_names.push(name.clone());
            }
        }
    }
    row_names.push("intercept".into());

    let col_width = 22usize;
    let label_width = 26usize;
    let mut out = String::new();
    out.push_str(&format!("{:<label_width$}", "Publication Count"));
    for (label, _) in fits {
        out.push_str(&format!("{label:>col_width$}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_width + col_width * fits.len()));
    out.push('\n');

    let cell = |fit: &GlmFit, name: &str| -> (String, String) {
        match fit.column_names.iter().position(|c| c == name) {
            Some(i) => {
                let stars = Stars::from_p(fit.p_values[i]);
                let stars = if stars == Stars::NotSignificant {
                    ""
                } else {
                    stars.as_str()
                };
                (
                    format!("{:.4}{}", fit.coefficients[i], stars),
                    format!("({:.3})", fit.standard_errors[i]),
                )
            }
            None => (String::new(), String::new()),
        }
    };
    for name in &row_names {
        out.push_str(&format!("{name:<label_width$}"));
        for (_, fit) in fits {
            out.push_str(&format!("{:>col_width$}", cell(fit, name).0));
        }
        out.push('\n');
        out.push_str(&format!("{:<label_width$}", ""));
        for (_, fit) in fits {
            out.push_str(&format!("{:>col_width$}", cell(fit, name).1));
        }
        out.push('\n');
    }
    out.push_str(&"-".repeat(label_width + col_width * fits.len()));
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "Observations"));
    for (_, fit) in fits {
        out.push_str(&format!("{:>col_width$}", fit.n_observations));
    }
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "AIC"));
    for (_, fit) in fits {
        out.push_str(&format!("{:>col_width$}", format!("{:.0}", fit.aic)));
    }
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "Converged"));
    for (_, fit) in fits {
        out.push_str(&format!("{:>col_width$}", fit.converged));
    }
    out.push('\n');
    out.push_str("Standard errors in parentheses    * p<=0.05; ** p<=0.01; *** p<=0.001\n");
    out
}
