//! Command-line driver: runs the full pipeline or a single stage against a
//! declarative config, and generates the bundled synthetic corpus.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use acknet::pipeline::{run_pipeline, run_stage, PipelineConfig};
use acknet::synth;

#[derive(Parser)]
#[command(
    name = "acknet",
    about = "Builds academic support networks from dissertation acknowledgement texts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force fully deterministic execution (the default; kept as an explicit
    /// switch for scripts).
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving corpus.jsonl, ground_truth.json, and config.toml.
    #[arg(long, short)]
    out: PathBuf,
    /// Documents to generate.
    #[arg(long, default_value_t = 300)]
    n_docs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory with the bundled tables (lexicon.csv, stopwords.txt, ...).
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Generate the two-community corpus used by the embedding checks
    /// instead of the full five-community plan.
    #[arg(long)]
    two_cluster: bool,
    /// Custom generation plan (TOML serialization of the SyntheticSpec type).
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run all stages in order.
    Run(StageArgs),
    /// Validate inputs and write enriched records.
    Ingest(StageArgs),
    /// Extract acknowledgement sections.
    Extract(StageArgs),
    /// Split, normalize, conjoin, and resolve pronouns.
    Prep(StageArgs),
    /// Detect and prune support-provider mentions.
    Entities(StageArgs),
    /// Train provider embeddings and the similarity matrix.
    Embed(StageArgs),
    /// Build the backbone network and detect communities.
    Graph(StageArgs),
    /// Score sentence sentiment and aggregate it.
    Sentiment(StageArgs),
    /// Bootstrap comparisons, normalization, word shifts, correlations.
    Stats(StageArgs),
    /// Fit the Inverse-Gaussian productivity model.
    Regress(StageArgs),
    /// Emit plot-ready figure datasets.
    Report(StageArgs),
    /// Generate a synthetic corpus with ground truth and a ready config.
    Synth(SynthArgs),
}

fn load_config(args: &StageArgs) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::from_toml_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if args.deterministic {
        config.deterministic = true;
    }
    Ok(config)
}

fn stage(args: &StageArgs, name: &str) -> Result<()> {
    let config = load_config(args)?;
    run_stage(&config, name)?;
    println!("stage {name} complete -> {}", config.out_dir.display());
    Ok(())
}

fn emit_config(out: &Path, data_dir: &Path, seed: u64) -> Result<PathBuf> {
    let data = data_dir
        .canonicalize()
        .with_context(|| format!("data dir {}", data_dir.display()))?;
    let text = format!(
        r#"seed = {seed}
out_dir = "out"

[paths]
corpus = "corpus.jsonl"
lexicon = "{lex}"
gender_table = "{gender}"
discipline_map = "{disc}"
valence_lexicon = "{valence}"
stopwords = "{stops}"
lemma_rules = "{lemma}"

[paths.rankings]
cwur = "{cwur}"
the = "{the}"
qs = "{qs}"
"#,
        lex = data.join("lexicon.csv").display(),
        gender = data.join("gender_table.csv").display(),
        disc = data.join("discipline_map.csv").display(),
        valence = data.join("valence.csv").display(),
        stops = data.join("stopwords.txt").display(),
        lemma = data.join("lemma_rules.txt").display(),
        cwur = data.join("rankings_cwur.csv").display(),
        the = data.join("rankings_the.csv").display(),
        qs = data.join("rankings_qs.csv").display(),
    );
    let path = out.join("config.toml");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let spec = match &args.spec {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?
        }
        None if args.two_cluster => synth::two_cluster_spec(args.n_docs),
        None => synth::default_spec(args.n_docs),
    };
    let (docs, truth) = synth::generate(&spec, args.seed)?;
    let corpus_path = args.out.join("corpus.jsonl");
    acknet::corpus::write_corpus(&corpus_path, &docs)?;
    let truth_path = args.out.join("ground_truth.json");
    synth::write_ground_truth(&truth_path, &truth)?;
    let config_path = emit_config(&args.out, &args.data_dir, args.seed)?;
    println!(
        "wrote {} documents -> {}\nground truth -> {}\nconfig -> {}",
        docs.len(),
        corpus_path.display(),
        truth_path.display(),
        config_path.display()
    );
    println!("next: acknet run --config {}", config_path.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let config = load_config(args)?;
            let manifest = run_pipeline(&config)?;
            println!(
                "pipeline complete: {} stages -> {}",
                manifest.stages.len(),
                config.out_dir.display()
            );
            Ok(())
        }
        Command::Ingest(args) => stage(args, "ingest"),
        Command::Extract(args) => stage(args, "extract"),
        Command::Prep(args) => stage(args, "prep"),
        Command::Entities(args) => stage(args, "entities"),
        Command::Embed(args) => stage(args, "embed"),
        Command::Graph(args) => stage(args, "graph"),
        Command::Sentiment(args) => stage(args, "sentiment"),
        Command::Stats(args) => stage(args, "stats"),
        Command::Regress(args) => stage(args, "regress"),
        Command::Report(args) => stage(args, "report"),
        Command::Synth(args) => run_synth(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
