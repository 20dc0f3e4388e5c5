use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "miboost", version, about = "Weak labeling, pseudo-parallel pairs, evaluation and human rating for MI response rephrasing")]
struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine indicative 4- and 5-grams per label from a gold corpus.
    MineNgrams(MineNgrams),
    /// Label a pool of sentences with the n-gram index.
    LabelNgram(LabelNgram),
    /// Label a pool by similarity-based retrieval against gold sentences.
    LabelSim(LabelSim),
    /// Merge gold data with both methods' decisions.
    Merge(Merge),
    /// Train the 15-way classifier on a (merged) corpus.
    TrainClassifier(TrainClassifier),
    /// Predict labels with a trained classifier.
    Classify(Classify),
    /// Build pseudo-parallel pairs by template replacement.
    BuildPpTemplate(BuildPpTemplate),
    /// Build pseudo-parallel pairs by similarity retrieval.
    BuildPpRetrieval(BuildPpRetrieval),
    /// Attach generic or n-gram prompts to pairs.
    FormatPrompts(FormatPrompts),
    /// Rephrase sentences (one per line) with the template rules.
    Rephrase(Rephrase),
    /// Score hypotheses with the automatic metric battery.
    Evaluate(Evaluate),
    /// Group rating items into shuffled two-rater batches.
    MakeBatches(MakeBatches),
    /// Serve batches to raters over HTTP.
    Serve(Serve),
    /// Validate and combine ratings files against the batches.
    IngestRatings(IngestRatings),
    /// Aggregate ratings and compute weighted kappa.
    Agreement(Agreement),
}

#[derive(Debug, Args)]
pub struct MineNgrams {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep n-grams whose count exceeds this.
    #[arg(long)]
    pub min_freq: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LabelNgram {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub ngrams: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LabelSim {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pool: PathBuf,
    /// Sentence vectors keyed by sentence id.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Threshold for every label, overriding the config.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Union,
    Intersection,
}

#[derive(Debug, Args)]
pub struct Merge {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub ngram: Option<PathBuf>,
    #[arg(long)]
    pub sim: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Merged corpus; conflicts go to `<out>.conflicts.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainClassifier {
    /// Training corpus; its gold sentences are split 80/10/10 and every
    /// weakly labeled sentence joins the training part.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Classify {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Corpus JSONL, or plain text with one sentence per line when `--text`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub text: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpacingArg {
    Preserve,
    Detokenize,
}

#[derive(Debug, Args)]
pub struct BuildPpTemplate {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "preserve")]
    pub spacing: SpacingArg,
    /// Pairs; skipped inputs go to `<out>.skips.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildPpRetrieval {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Sentence vectors keyed by sentence id.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep only the best partner per source.
    #[arg(long)]
    pub one_best: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PromptArg {
    Generic,
    Ngram,
}

#[derive(Debug, Args)]
pub struct FormatPrompts {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum)]
    pub style: PromptArg,
    /// Prompted pairs; a two-column training TSV goes to `<out>.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Rephrase {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "detokenize")]
    pub spacing: SpacingArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    /// Source sentences, one per line.
    #[arg(long, required_unless_present = "pairs")]
    pub src: Option<PathBuf>,
    /// Reference sentences, one per line.
    #[arg(long, required_unless_present = "pairs")]
    pub r#ref: Option<PathBuf>,
    /// Pair JSONL supplying sources and references instead of --src/--ref.
    #[arg(long, conflicts_with_all = ["src", "ref"])]
    pub pairs: Option<PathBuf>,
    /// Hypothesis file; repeat for several systems.
    #[arg(long, required = true)]
    pub hyp: Vec<PathBuf>,
    /// System name per --hyp, defaulting to the file stem.
    #[arg(long)]
    pub system: Vec<String>,
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    /// Sentence vectors keyed by sentence text.
    #[arg(long)]
    pub sentence_vectors: Option<PathBuf>,
    /// Classifier for style strength.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Pre-tagged (`word/TAG`) sources, replacing the built-in tagger.
    #[arg(long)]
    pub src_tags: Option<PathBuf>,
    /// Pre-tagged hypotheses, one file per --hyp.
    #[arg(long)]
    pub hyp_tags: Vec<PathBuf>,
    #[arg(long)]
    pub no_strip: bool,
    /// Report JSON; the metric table goes to `--table` or `<out>` with a
    /// `.tsv` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MakeBatches {
    /// Original sentences, one per line.
    #[arg(long)]
    pub src: PathBuf,
    /// `NAME=FILE` rephrasings aligned with --src; repeat per system.
    #[arg(long = "candidate", required = true)]
    pub candidates: Vec<String>,
    /// Comma-separated rater ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub raters: Vec<String>,
    /// Directory for one JSON file per batch.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long)]
    pub batches: PathBuf,
    /// Append-only rating log, replayed on start.
    #[arg(long, default_value = "ratings.jsonl")]
    pub log: PathBuf,
    #[arg(long, env = "MI_RATING_PORT", default_value_t = miboost_rating::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Built UI bundle to serve at `/`.
    #[arg(long)]
    pub r#static: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestRatings {
    #[arg(long)]
    pub batches: PathBuf,
    /// Ratings CSV or service log (`.jsonl`); repeatable.
    #[arg(long, required = true)]
    pub ratings: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Agreement {
    #[arg(long)]
    pub batches: PathBuf,
    #[arg(long)]
    pub ratings: PathBuf,
    /// Report JSON; the score table goes to `--table` or `<out>` with a
    /// `.tsv` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            let line = serde_json::json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .init();
}

fn resolve(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = resolve(&cli)?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global()?;
    }
    use commands as c;
    match cli.command {
        Command::MineNgrams(a) => c::mine_ngrams(a, config),
        Command::LabelNgram(a) => c::label_ngram(a, config),
        Command::LabelSim(a) => c::label_sim(a, config),
        Command::Merge(a) => c::merge(a, config),
        Command::TrainClassifier(a) => c::train_classifier(a, config),
        Command::Classify(a) => c::classify(a, config),
        Command::BuildPpTemplate(a) => c::build_pp_template(a, config),
        Command::BuildPpRetrieval(a) => c::build_pp_retrieval(a, config),
        Command::FormatPrompts(a) => c::format_prompts(a, config),
        Command::Rephrase(a) => c::rephrase(a, config),
        Command::Evaluate(a) => c::evaluate(a, config),
        Command::MakeBatches(a) => c::make_batches(a, config),
        Command::Serve(a) => c::serve(a, config),
        Command::IngestRatings(a) => c::ingest_ratings(a, config),
        Command::Agreement(a) => c::agreement(a, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let causes: Vec<String> = e.chain().skip(1).map(ToString::to_string).collect();
            let line = serde_json::json!({ "level": "ERROR", "error": e.to_string(), "causes": causes });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
