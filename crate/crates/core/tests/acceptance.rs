//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use acknet::corpus;
use acknet::embed::{self, EmbeddingConfig};
use acknet::entities::{self, ProviderLexicon};
use acknet::graph::{self, WeightedGraph};
use acknet::pipeline::run_pipeline;
use acknet::regress::{self, DesignMatrix, Link};
use acknet::stats;
use acknet::synth;
use acknet::textprep::{self, ConjoinIndex, Lemmatizer, StopwordSet};

fn pass(criterion: usize, name: &str, started: Instant) {
    println!(
        "ACCEPTANCE {criterion} {name}: PASS ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Composite Simpson quadrature of the disparity null density
/// `(k-1)(1-x)^(k-2)` over `[p, 1]`: the independent oracle for the closed
/// form.
fn integrate_null_tail(p: f64, k: usize, panels: usize) -> f64 {
    let f = |x: f64| (k as f64 - 1.0) * (1.0 - x).powi(k as i32 - 2);
    let (a, b) = (p, 1.0);
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

#[test]
fn criterion_1_disparity_filter() {
    let started = Instant::now();

    // closed form vs quadrature on 1000 randomized (k, p) pairs
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let k: usize = rng.random_range(2..=25);
        let p: f64 = rng.random_range(0.001..0.999);
        let closed = graph::edge_significance(p, k);
        let quadrature = integrate_null_tail(p, k, 20_000);
        assert!(
            (closed - quadrature).abs() < 1e-9,
            "k={k} p={p}: closed {closed} vs quadrature {quadrature}"
        );
    }

    // backbone edge count monotone over an ascending alpha sweep
    let mut g = WeightedGraph::new((0..40).map(|i| format!("n{i:02}")).collect(), vec![1; 40]);
    let mut wrng = ChaCha8Rng::seed_from_u64(202);
    for u in 0..40usize {
        for v in (u + 1)..40 {
            if wrng.random::<f64>() < 0.3 {
                // skewed weights so significance varies across edges
                let w: f64 = wrng.random_range(0.01..1.0f64).powi(3);
                g.add_edge(u, v, w).unwrap();
            }
        }
    }
    let alphas: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
    let sweep = graph::sweep_alpha(&g, &alphas);
    for pair in sweep.windows(2) {
        assert!(
            pair[1].edge_count >= pair[0].edge_count,
            "edge count dropped between alpha {} and {}",
            pair[0].alpha,
            pair[1].alpha
        );
    }
    assert_eq!(sweep.last().unwrap().edge_count, g.edge_count());

    assert!(started.elapsed().as_secs_f64() < 10.0, "criterion 1 runtime");
    pass(1, "disparity filter closed form + monotone sweep", started);
}

#[test]
fn criterion_2_community_detection() {
    let started = Instant::now();

    // planted 5-block graph: 100 nodes, p_in = 0.3, p_out = 0.02
    let blocks = 5usize;
    let per_block = 20usize;
    let n = blocks * per_block;
    let truth: Vec<usize> = (0..n).map(|i| i / per_block).collect();
    let mut g = WeightedGraph::new((0..n).map(|i| format!("n{i:03}")).collect(), vec![1; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(20240801);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if truth[u] == truth[v] { 0.3 } else { 0.02 };
            if rng.random::<f64>() < p {
                g.add_edge(u, v, 1.0).unwrap();
            }
        }
    }
    let partition = graph::girvan_newman(&g).unwrap();
    let found = partition.labels_for(&g.nodes);
    let ari = stats::adjusted_rand_index(&found, &truth);
    assert!(ari >= 0.9, "planted-block ARI {ari} below 0.9");

    // K4 brute-force modularity oracle: enumerate all 15 partitions
    let mut k4 = WeightedGraph::new((0..4).map(|i| format!("k{i}")).collect(), vec![1; 4]);
    for u in 0..4usize {
        for v in (u + 1)..4 {
            k4.add_edge(u, v, 1.0).unwrap();
        }
    }
    fn partitions(prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == 4 {
            out.push(prefix.clone());
            return;
        }
        let limit = prefix.iter().copied().max().map(|m| m + 1).unwrap_or(0);
        for label in 0..=limit {
            prefix.push(label);
            partitions(prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    partitions(&mut Vec::new(), &mut all);
    assert_eq!(all.len(), 15);
    let brute_best = all
        .iter()
        .map(|labels| graph::modularity(&k4, labels))
        .fold(f64::NEG_INFINITY, f64::max);
    let k4_partition = graph::girvan_newman(&k4).unwrap();
    assert!(
        (k4_partition.modularity - brute_best).abs() < 1e-12,
        "K4 modularity {} vs brute force {brute_best}",
        k4_partition.modularity
    );
    assert_eq!(k4_partition.n_communities, 1);

    assert!(started.elapsed().as_secs_f64() < 60.0, "criterion 2 runtime");
    pass(2, "Girvan-Newman planted blocks + K4 oracle", started);
}

#[test]
fn criterion_3_embedding() {
    let started = Instant::now();

    // the two-cluster synthetic corpus, taken through the real text path
    let spec = synth::two_cluster_spec(400);
    let (docs, _) = synth::generate(&spec, 33).unwrap();
    let stopwords = StopwordSet::from_file(&common::data_dir().join("stopwords.txt")).unwrap();
    let lexicon = ProviderLexicon::from_csv(&common::data_dir().join("lexicon.csv")).unwrap();

    let mut vocab = std::collections::BTreeSet::new();
    let mut texts = Vec::new();
    for doc in &docs {
        let ack = corpus::extract_acknowledgement(doc, 1100).unwrap();
        for raw in textprep::split_sentences(&ack.text) {
            vocab.extend(textprep::raw_tokens(&raw));
        }
        texts.push((doc.id.clone(), ack.text));
    }
    let lemmatizer = Lemmatizer::from_file(&common::data_dir().join("lemma_rules.txt"))
        .unwrap()
        .with_known(vocab);

    let mut sentences = Vec::new();
    let mut token_docs = Vec::new();
    for (doc_id, text) in &texts {
        let prepared = textprep::prepare_document(doc_id, text, &stopwords, &lemmatizer);
        token_docs.push(prepared.iter().map(|s| s.tokens.clone()).collect::<Vec<_>>());
        sentences.push(prepared);
    }
    let rules = textprep::build_conjoin_rules(&token_docs, 3, 50, 0.5);
    let index = ConjoinIndex::new(&rules);
    for doc in sentences.iter_mut() {
        for s in doc.iter_mut() {
            s.tokens = textprep::apply_conjoin(&s.tokens, &index);
        }
        textprep::reindex_offsets(doc);
    }
    let mut mentions = Vec::new();
    for doc in &sentences {
        mentions.extend(entities::detect_mentions(doc, &lexicon));
    }
    let active = entities::prune_rare_providers(&mentions, 50);
    let mentions = entities::filter_mentions(mentions, &active);
    let all: Vec<textprep::Sentence> = sentences.into_iter().flatten().collect();
    let items = embed::build_training_set(&all, &mentions);

    let cfg = EmbeddingConfig {
        seed: 404,
        ..EmbeddingConfig::default()
    };
    let table_a = embed::train(&items, &cfg).unwrap();
    let table_b = embed::train(&items, &cfg).unwrap();
    assert_eq!(table_a, table_b, "deterministic mode must be bit-identical");

    let providers: Vec<String> = ["advisor", "father", "mentor", "mother"]
        .map(String::from)
        .to_vec();
    let sim = embed::similarity_matrix(&table_a, &providers).unwrap();
    let pair = |a: &str, b: &str| {
        let i = providers.iter().position(|p| p == a).unwrap();
        let j = providers.iter().position(|p| p == b).unwrap();
        sim.get(i, j)
    };
    let within = [pair("advisor", "mentor"), pair("mother", "father")];
    let cross = [
        pair("advisor", "mother"),
        pair("advisor", "father"),
        pair("mentor", "mother"),
        pair("mentor", "father"),
    ];
    let min_within = within.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_cross = cross.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        min_within > max_cross,
        "min within-cluster cosine {min_within} must exceed max cross-cluster {max_cross}"
    );

    assert!(started.elapsed().as_secs_f64() < 120.0, "criterion 3 runtime");
    pass(3, "embedding determinism + cluster separation", started);
}

#[test]
fn criterion_4_end_to_end() {
    let started = Instant::now();

    let dir = tempfile::tempdir().unwrap();
    let spec = synth::default_spec(300);
    let (config, truth) = common::write_corpus_and_config(dir.path(), &spec, 42);
    run_pipeline(&config).expect("pipeline completes");

    // provider partition vs planted communities
    let (_, rows) = common::read_csv(&config.out_dir.join("06_graph/communities.csv"));
    let found: Vec<String> = rows.iter().map(|r| r[1].clone()).collect();
    let planted: Vec<String> = rows
        .iter()
        .map(|r| truth.provider_community[&r[0]].clone())
        .collect();
    let ari = stats::adjusted_rand_index(&found, &planted);
    assert!(ari >= 0.8, "end-to-end community ARI {ari} below 0.8");

    // per-community mention means within 10% of the planted means
    let (_, mention_rows) = common::read_csv(&config.out_dir.join("04_entities/mentions.csv"));
    let mut per_community: BTreeMap<String, usize> = BTreeMap::new();
    for row in &mention_rows {
        *per_community.entry(row[2].clone()).or_insert(0) += 1;
    }
    for community in &spec.communities {
        let detected = per_community.get(&community.name).copied().unwrap_or(0) as f64
            / truth.n_documents as f64;
        let planted_mean = community.mentions_per_doc;
        let relative = (detected - planted_mean).abs() / planted_mean;
        assert!(
            relative <= 0.10,
            "{}: detected mean {detected:.3} vs planted {planted_mean} ({:.1}% off)",
            community.name,
            relative * 100.0
        );
    }

    assert!(started.elapsed().as_secs_f64() < 300.0, "criterion 4 runtime");
    pass(4, "end-to-end recovery on 300 documents", started);
}

fn simulate_glm(
    n: usize,
    beta: &[f64],
    lambda: f64,
    rng: &mut ChaCha8Rng,
) -> (DesignMatrix, Vec<f64>) {
    let k = beta.len() - 1;
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); k];
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut eta = beta[0];
        for (j, col) in cols.iter_mut().enumerate() {
            let x: f64 = rng.random_range(-1.0..1.0);
            eta += beta[j + 1] * x;
            col.push(x);
        }
        y.push(regress::invgauss::sample(rng, eta.exp(), lambda));
    }
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    (
        DesignMatrix::from_columns(&name_refs, &cols, n).unwrap(),
        y,
    )
}

#[test]
fn criterion_5_inverse_gaussian_glm() {
    let started = Instant::now();
    let truth = [1.2, 0.5, -0.3, 0.15];

    // single n = 5000 fit: every coefficient within 3 reported SEs
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let (design, y) = simulate_glm(5000, &truth, 2.0, &mut rng);
    let fit = regress::fit_inverse_gaussian_glm(&design, &y, Link::Log).unwrap();
    assert!(fit.converged);
    for (j, &b) in truth.iter().enumerate() {
        assert!(
            (fit.coefficients[j] - b).abs() <= 3.0 * fit.standard_errors[j],
            "coefficient {j}: {} vs {b} (se {})",
            fit.coefficients[j],
            fit.standard_errors[j]
        );
    }

    // 200 replicates: aggregate 95% CI coverage of the truth in [90%, 98%]
    let mut covered = 0usize;
    let mut total = 0usize;
    for rep in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(90_000 + rep);
        let (design, y) = simulate_glm(5000, &truth, 2.0, &mut rng);
        let fit = regress::fit_inverse_gaussian_glm(&design, &y, Link::Log).unwrap();
        for (j, &b) in truth.iter().enumerate() {
            let (lo, hi) = fit.ci95[j];
            total += 1;
            if (lo..=hi).contains(&b) {
                covered += 1;
            }
        }
    }
    let coverage = covered as f64 / total as f64;
    assert!(
        (0.90..=0.98).contains(&coverage),
        "CI coverage {coverage:.3} outside [0.90, 0.98]"
    );

    // intercept-only closed form: ln of the sample mean
    let y = [2.0, 4.0, 6.0];
    let intercept_only = DesignMatrix {
        column_names: vec!["intercept".into()],
        data: nalgebra::DMatrix::from_element(3, 1, 1.0),
    };
    let fit = regress::fit_inverse_gaussian_glm(&intercept_only, &y, Link::Log).unwrap();
    assert!(
        (fit.coefficients[0] - 4.0f64.ln()).abs() < 1e-6,
        "intercept {} vs ln(4)",
        fit.coefficients[0]
    );

    assert!(started.elapsed().as_secs_f64() < 120.0, "criterion 5 runtime");
    pass(5, "IG GLM recovery, coverage, closed form", started);
}

#[test]
fn criterion_6_vif() {
    let started = Instant::now();

    // analytic VIF = 1/(1-r^2) via exactly correlated construction
    let x1 = vec![0.5, -0.5, 0.5, -0.5];
    let perp = vec![0.5, 0.5, -0.5, -0.5];
    for r in [0.5f64, 0.9, 0.99] {
        let x2: Vec<f64> = x1
            .iter()
            .zip(&perp)
            .map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b)
            .collect();
        let design = DesignMatrix::from_columns(&["x1", "x2"], &[x1.clone(), x2], 4).unwrap();
        let (_, report) = regress::vif_prune(&design, 1e12).unwrap();
        let expected = 1.0 / (1.0 - r * r);
        for (name, vif) in &report.retained {
            assert!(
                (vif - expected).abs() < 1e-6,
                "r={r} {name}: VIF {vif} vs {expected}"
            );
        }
    }

    // duplicated column: unbounded VIF, one copy removed
    let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let c = vec![0.3, -0.2, 0.9, 0.1, -0.4];
    let design =
        DesignMatrix::from_columns(&["a", "a_copy", "c"], &[a.clone(), a, c], 5).unwrap();
    let (pruned, report) = regress::vif_prune(&design, 10.0).unwrap();
    assert_eq!(report.removal_sequence.len(), 1);
    assert!(report.removal_sequence[0].1.is_infinite());
    assert_eq!(pruned.n_cols(), 3);
    assert!(report.retained.iter().all(|(_, v)| *v <= 10.0));

    pass(6, "VIF closed form + duplicate removal", started);
}

#[test]
fn criterion_7_statistics() {
    let started = Instant::now();

    // JSD against a direct entropy evaluation
    let h = |d: &[f64]| -> f64 {
        d.iter()
            .map(|&x| if x > 0.0 { -x * x.log2() } else { 0.0 })
            .sum()
    };
    let p = [0.5, 0.5];
    let q = [0.9, 0.1];
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    let direct = h(&m) - 0.5 * (h(&p) + h(&q));
    assert!((stats::jsd(&p, &q) - direct).abs() < 1e-12);

    let repeat = |w: &str, n: usize| std::iter::repeat_n(w.to_string(), n).collect::<Vec<_>>();
    let mut a = repeat("u", 50);
    a.extend(repeat("v", 50));
    let mut b = repeat("u", 90);
    b.extend(repeat("v", 10));
    let shift = stats::jsd_word_shift(&a, &b, 10).unwrap();
    assert!((shift.total_jsd - direct).abs() < 1e-12);

    // contributions sum to the total on a larger random example
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut big_a = Vec::new();
    let mut big_b = Vec::new();
    for w in 0..60 {
        big_a.extend(repeat(&format!("w{w}"), rng.random_range(0..80)));
        big_b.extend(repeat(&format!("w{w}"), rng.random_range(0..80)));
    }
    if let Ok(result) = stats::jsd_word_shift(&big_a, &big_b, 10) {
        let sum: f64 = result.shifts.iter().map(|s| s.jsd_contribution).sum();
        assert!((sum - result.total_jsd).abs() < 1e-9);
        assert!(result.shifts.iter().all(|s| s.jsd_contribution >= 0.0));
    } else {
        panic!("random corpora should pass the frequency filter");
    }

    // bootstrap 95% CI coverage for Normal(0,1) over 200 trials
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut contains = 0usize;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + trial);
        let values: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
        let est = stats::bootstrap_mean("trial", &values, 2000, 1.0, 70_000 + trial).unwrap();
        if est.ci_low <= 0.0 && 0.0 <= est.ci_high {
            contains += 1;
        }
    }
    let coverage = contains as f64 / 200.0;
    assert!(
        (0.90..=0.98).contains(&coverage),
        "bootstrap coverage {coverage} outside [0.90, 0.98]"
    );

    // per-group normalized means vanish
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let values: Vec<f64> = (0..400).map(|_| rng.random_range(-5.0..20.0)).collect();
    let keys: Vec<usize> = (0..400).map(|i| i % 7).collect();
    let normalized = stats::group_normalize(&values, &keys);
    for group in 0..7 {
        let members: Vec<f64> = keys
            .iter()
            .zip(&normalized.values)
            .filter(|(k, _)| **k == group)
            .map(|(_, v)| *v)
            .collect();
        let mean: f64 = members.iter().sum::<f64>() / members.len() as f64;
        assert!(mean.abs() < 1e-12, "group {group} mean {mean}");
        assert!(members.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    // Spearman tie fixture against hand-computed average ranks
    let xs = [1.0, 2.0, 2.0, 4.0];
    let ys = [3.0, 1.0, 4.0, 2.0];
    assert_eq!(stats::average_ranks(&xs), vec![1.0, 2.5, 2.5, 4.0]);
    let rho = stats::spearman(&xs, &ys).unwrap();
    // Pearson of ranks (1, 2.5, 2.5, 4) with (3, 1, 4, 2) by hand:
    // centered products sum to -1.5, variances 4.5 and 5
    let expected = -1.5 / (4.5f64 * 5.0).sqrt();
    assert!((rho - expected).abs() < 1e-12, "rho {rho} vs {expected}");

    // Cohen's kappa three-category fixture, direct formula
    let la = ["x", "x", "x", "x", "x", "y", "y", "y", "y", "y", "y", "y", "z", "z", "z"];
    let lb = ["x", "x", "x", "x", "y", "x", "y", "y", "y", "y", "y", "z", "y", "z", "z"];
    let n = 15.0;
    let p_o = 11.0 / n;
    let p_e = (5.0 / n) * (5.0 / n) + (7.0 / n) * (7.0 / n) + (3.0 / n) * (3.0 / n);
    let expected = (p_o - p_e) / (1.0 - p_e);
    let kappa = stats::cohen_kappa(&la, &lb).unwrap();
    assert!((kappa - expected).abs() < 1e-12, "kappa {kappa} vs {expected}");

    pass(7, "JSD, bootstrap coverage, normalization, rank stats", started);
}

#[test]
fn criterion_8_extraction_goldens() {
    let started = Instant::now();

    struct Golden {
        name: &'static str,
        pages: Vec<String>,
        expected_pages: Vec<usize>,
    }

    let long = |prefix: &str, chars: usize| -> String {
        let mut s = String::from(prefix);
        while s.chars().count() < chars {
            s.push_str(" lorem");
        }
        s.truncate_to_chars(chars);
        s
    };
    trait TruncateChars {
        fn truncate_to_chars(&mut self, n: usize);
    }
    impl TruncateChars for String {
        fn truncate_to_chars(&mut self, n: usize) {
            let byte = self
                .char_indices()
                .nth(n)
                .map(|(b, _)| b)
                .unwrap_or(self.len());
            self.truncate(byte);
        }
    }

    let goldens = vec![
        Golden {
            name: "upper_plural",
            pages: vec!["ACKNOWLEDGEMENTS\nI thank my advisor.".into(), "Chapter 1".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "lower_plural",
            pages: vec!["acknowledgements to everyone".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "us_singular",
            pages: vec!["Acknowledgment\nthanks".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "us_plural",
            pages: vec!["Acknowledgments\nthanks again".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "uk_singular",
            pages: vec!["Acknowledgement\nthanks once".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "trailing_colon",
            pages: vec!["Acknowledgements:\nwith punctuation".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "leading_whitespace",
            pages: vec!["   Acknowledgements\nindented header".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "header_after_front_matter",
            pages: vec!["Abstract\nsummary".into(), "Acknowledgements\nlate header".into()],
            expected_pages: vec![1],
        },
        Golden {
            name: "long_page_continues",
            pages: vec![long("Acknowledgements\n", 1200), "short tail prose".into(), "Chapter 1".into()],
            expected_pages: vec![0, 1],
        },
        Golden {
            name: "stop_table_of_contents",
            pages: vec![long("Acknowledgements\n", 1200), "Table of Contents\n1. Intro".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "stop_list_of_figures",
            pages: vec![long("Acknowledgements\n", 1200), "List of Figures".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "stop_list_of_tables",
            pages: vec![long("Acknowledgements\n", 1200), "List of Tables".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "stop_appendix",
            pages: vec![long("Acknowledgements\n", 1200), "Appendix A\nextra".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "stop_abstract",
            pages: vec![long("Acknowledgements\n", 1200), "Abstract\nsummary".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "stop_chapter",
            pages: vec![long("Acknowledgements\n", 1200), "Chapter 1\nIntro".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "exactly_1100_stays_single",
            pages: vec![long("Acknowledgements\n", 1100), "next page".into()],
            expected_pages: vec![0],
        },
        Golden {
            name: "just_over_1100_continues",
            pages: vec![long("Acknowledgements\n", 1101), "next page".into()],
            expected_pages: vec![0, 1],
        },
        Golden {
            name: "double_continuation",
            pages: vec![
                long("Acknowledgements\n", 1200),
                long("more prose ", 1200),
                "final short tail".into(),
                "Chapter 1".into(),
            ],
            expected_pages: vec![0, 1, 2],
        },
        Golden {
            name: "long_page_at_document_end",
            pages: vec![long("Acknowledgements\n", 1500)],
            expected_pages: vec![0],
        },
        Golden {
            name: "unicode_char_counting",
            // 1101 multibyte chars: continuation must trigger on chars, not bytes
            pages: vec![
                {
                    let mut s = String::from("Acknowledgements\n");
                    while s.chars().count() < 1101 {
                        s.push('é');
                    }
                    s
                },
                "suite en prose".into(),
            ],
            expected_pages: vec![0, 1],
        },
    ];
    assert_eq!(goldens.len(), 20);

    for golden in &goldens {
        let doc = corpus::DocumentRecord {
            id: golden.name.into(),
            pages: golden.pages.clone(),
            author_name: "Test Author".into(),
            university: "Test University".into(),
            year: 2015,
            subjects: vec![],
            advisor: None,
            pub_years: vec![],
        };
        let ack = corpus::extract_acknowledgement(&doc, 1100)
            .unwrap_or_else(|e| panic!("{}: {e}", golden.name));
        assert_eq!(ack.source_pages, golden.expected_pages, "{}", golden.name);
        // byte-exact: the output is the newline join of the source pages
        let expected_text = golden
            .expected_pages
            .iter()
            .map(|&i| golden.pages[i].clone())
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(ack.text, expected_text, "{} text", golden.name);
    }

    // error contracts alongside the goldens
    let no_header = corpus::DocumentRecord {
        id: "none".into(),
        pages: vec!["Table of Contents ...".into()],
        author_name: String::new(),
        university: String::new(),
        year: 2010,
        subjects: vec![],
        advisor: None,
        pub_years: vec![],
    };
    assert!(matches!(
        corpus::extract_acknowledgement(&no_header, 1100),
        Err(corpus::CorpusError::NoAcknowledgementFound(_))
    ));
    let empty = corpus::DocumentRecord {
        pages: vec![],
        ..no_header
    };
    assert!(matches!(
        corpus::extract_acknowledgement(&empty, 1100),
        Err(corpus::CorpusError::EmptyDocument(_))
    ));

    pass(8, "20 extraction goldens byte-exact", started);
}
