//! The `traitqa` command line.
//!
//! Subcommands: `build`, `match`, `stats`, `evaluate`. Every flag may also be
//! set in a flat TOML file passed with `--config`; command-line flags win.
//! Data goes to files or stdout, diagnostics to stderr. Exit status is 0 on
//! success, 1 on usage errors and 2 on data or validation errors.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::parse_corpus;
use crate::dataset::{BuildConfig, NegativePolicy, Split, SquadDataset};
use crate::error::Error;
use crate::eval::{evaluate_detailed, Coverage, PredictionSet};
use crate::matcher::{
    parse_references, EmbeddingProvider, HashedNgramProvider, HttpProvider, HttpProviderConfig,
    PrecomputedProvider, TraitMatcher, TOKEN_ENV,
};
use crate::pipeline::{build_dataset, match_corpus};

pub use config::FileConfig;
pub use manifest::{sha256_hex, EntryCounters, FileDigest, ManifestCounters, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "traitqa",
    version,
    about = "Build trait-span QA datasets and score predictions"
)]
struct Cli {
    /// Flat TOML file providing defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a SQuAD v2.0 split from a comment corpus
    Build(BuildArgs),
    /// Write the sentence/trait match table of a corpus as JSONL
    Match(MatchArgs),
    /// Print entry counts and the answers-per-question histogram of a dataset
    Stats(StatsArgs),
    /// Score predictions against a dataset
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// JSONL corpus with `id` and `text` keys
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// JSONL trait reference sentences
    #[arg(long)]
    traits: Option<PathBuf>,
    /// Minimum cosine similarity for a match (inclusive)
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Read at most this many comments
    #[arg(long)]
    limit: Option<usize>,
    /// Worker threads for matching
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Embedding provider: hashed, table or http
    #[arg(long)]
    provider: Option<String>,
    /// Precomputed embedding table (JSONL of text/embedding) for the table provider
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Embedding service URL for the http provider
    #[arg(long)]
    endpoint: Option<String>,
    /// Texts per embedding request
    #[arg(long)]
    embed_batch_size: Option<usize>,
    /// Concurrent embedding requests
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Attempts per embedding request before giving up
    #[arg(long)]
    embed_attempts: Option<u32>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// train or validation
    #[arg(long)]
    split: Option<String>,
    /// Fraction of train entries replaced with unanswerable questions
    #[arg(long)]
    unanswerable: Option<f64>,
    /// Seed for unanswerable selection and negative trait draws
    #[arg(long)]
    seed: Option<u64>,
    /// Question template containing `{trait}`
    #[arg(long)]
    template: Option<String>,
    /// Validation negatives: all-absent-traits or one-absent-trait
    #[arg(long)]
    validation_negatives: Option<String>,
    /// Dataset title (defaults to the corpus file stem)
    #[arg(long)]
    title: Option<String>,
    /// Output dataset JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run manifest path (defaults to <out stem>.manifest.json)
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// Output JSONL (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// SQuAD v2.0 dataset JSON
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Print JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// SQuAD v2.0 dataset JSON
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// JSON object mapping question id to answer text
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Require predictions for exactly the dataset's question ids
    #[arg(long)]
    strict: bool,
    /// Write the full-precision report JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the full-precision report JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Template(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(Error::io("<stdout>", e))
    }
}

type CliResult<T> = Result<T, CliError>;

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Data(Error::io(path, e)))
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Data(Error::io(path, e)))
}

/// Runs the command line against the process stdout and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with_output(args, &mut lock)
}

pub fn run_with_output<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Data(Error::io(
                    path,
                    std::io::Error::from(std::io::ErrorKind::NotFound),
                )));
            }
            FileConfig::load(path).map_err(CliError::Usage)?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Build(args) => run_build(args, &file, out),
        Command::Match(args) => run_match(args, &file, out),
        Command::Stats(args) => run_stats(args, &file, out),
        Command::Evaluate(args) => run_evaluate(args, &file, out),
    }
}

struct CorpusSettings {
    corpus: PathBuf,
    traits: PathBuf,
    threshold: f64,
    limit: Option<usize>,
    workers: usize,
}

impl CorpusSettings {
    fn resolve(args: CorpusArgs, file: &FileConfig) -> CliResult<Self> {
        let threshold = args
            .threshold
            .or(file.threshold)
            .unwrap_or(crate::matcher::DEFAULT_THRESHOLD);
        let workers = args
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(CorpusSettings {
            corpus: require(args.corpus.or_else(|| file.corpus.clone()), "corpus")?,
            traits: require(args.traits.or_else(|| file.traits.clone()), "traits")?,
            threshold,
            limit: args.limit.or(file.limit),
            workers,
        })
    }
}

fn make_provider(
    args: EmbeddingArgs,
    file: &FileConfig,
    inputs: &mut BTreeMap<String, FileDigest>,
) -> CliResult<Box<dyn EmbeddingProvider>> {
    let kind = args
        .provider
        .or_else(|| file.provider.clone())
        .unwrap_or_else(|| "hashed".to_string());
    match kind.as_str() {
        "hashed" => Ok(Box::new(HashedNgramProvider)),
        "table" => {
            let path = require(
                args.embeddings.or_else(|| file.embeddings.clone()),
                "embeddings",
            )?;
            let bytes = read_input(&path)?;
            inputs.insert("embeddings".into(), FileDigest::of(&path, &bytes));
            let text = String::from_utf8(bytes).map_err(|e| {
                CliError::Data(Error::Malformed {
                    source_name: path.display().to_string(),
                    line: 0,
                    message: format!("invalid UTF-8: {e}"),
                })
            })?;
            Ok(Box::new(PrecomputedProvider::parse(
                &text,
                &path.display().to_string(),
            )?))
        }
        "http" => {
            let endpoint = require(args.endpoint.or_else(|| file.endpoint.clone()), "endpoint")?;
            let mut cfg = HttpProviderConfig::new(endpoint);
            cfg.token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
            if let Some(n) = args.embed_batch_size.or(file.embed_batch_size) {
                cfg.batch_size = n;
            }
            if let Some(n) = args.max_in_flight.or(file.max_in_flight) {
                cfg.max_in_flight = n;
            }
            if let Some(n) = args.embed_attempts.or(file.embed_attempts) {
                cfg.attempts = n;
            }
            cfg.timeout = Duration::from_secs(120);
            Ok(Box::new(HttpProvider::new(cfg)?))
        }
        other => Err(CliError::Usage(format!(
            "unknown provider {other:?} (expected hashed, table or http)"
        ))),
    }
}

fn run_build(args: BuildArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let settings = CorpusSettings::resolve(args.input, file)?;

    let mut cfg = BuildConfig {
        threshold: settings.threshold,
        ..BuildConfig::default()
    };
    if let Some(split) = args.split.or_else(|| file.split.clone()) {
        cfg.split = split.parse()?;
    }
    let ratio = args.unanswerable.or(file.unanswerable);
    if let Some(p) = ratio {
        cfg.unanswerable_ratio = p;
    }
    if let Some(seed) = args.seed.or(file.seed) {
        cfg.seed = seed;
    }
    if let Some(template) = args.template.or_else(|| file.template.clone()) {
        cfg.question_template = template;
    }
    if let Some(policy) = args
        .validation_negatives
        .or_else(|| file.validation_negatives.clone())
    {
        cfg.validation_negative_policy = policy.parse::<NegativePolicy>()?;
    }
    cfg.validate()?;
    if cfg.split == Split::Validation && ratio.is_some() {
        log::warn!("--unanswerable has no effect on the validation split");
    }
    let out_path = require(args.out.or_else(|| file.out.clone()), "out")?;
    let manifest_path = args
        .manifest
        .or_else(|| file.manifest.clone())
        .unwrap_or_else(|| out_path.with_extension("manifest.json"));

    let mut inputs = BTreeMap::new();
    let corpus_bytes = read_input(&settings.corpus)?;
    inputs.insert(
        "corpus".into(),
        FileDigest::of(&settings.corpus, &corpus_bytes),
    );
    let loaded = parse_corpus(
        &corpus_bytes,
        &settings.corpus.display().to_string(),
        settings.limit,
    )?;
    let refs_bytes = read_input(&settings.traits)?;
    inputs.insert(
        "traits".into(),
        FileDigest::of(&settings.traits, &refs_bytes),
    );
    let refs = parse_references(&refs_bytes, &settings.traits.display().to_string())?;
    let provider = make_provider(args.embedding, file, &mut inputs)?;

    let title = args
        .title
        .or_else(|| file.title.clone())
        .unwrap_or_else(|| {
            settings.corpus.file_stem().map_or_else(
                || "corpus".to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
        });
    log::info!(
        "building {} split from {} comments ({} skipped)",
        cfg.split,
        loaded.comments.len(),
        loaded.skipped
    );
    let built = build_dataset(
        &loaded.comments,
        &refs,
        provider.as_ref(),
        &cfg,
        &title,
        settings.workers,
    )?;
    let json = built.dataset.to_json_bytes()?;
    write_output(&out_path, &json)?;

    let c = built.counters;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        limit: settings.limit,
        title,
        provider: provider.describe(),
        inputs,
        output: FileDigest::of(&out_path, &json),
        counters: ManifestCounters {
            comments_read: loaded.comments.len(),
            comments_skipped: loaded.skipped,
            matches: c.matches,
            positive_questions: c.positive_questions,
            entries: EntryCounters {
                answerable: c.answerable_entries,
                unanswerable: c.unanswerable_entries,
                total: c.total_entries,
            },
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let mut manifest_json = serde_json::to_vec_pretty(&manifest).map_err(Error::from)?;
    manifest_json.push(b'\n');
    write_output(&manifest_path, &manifest_json)?;
    writeln!(
        out,
        "wrote {} entries ({} answerable, {} unanswerable) to {}",
        c.total_entries,
        c.answerable_entries,
        c.unanswerable_entries,
        out_path.display()
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MatchRow<'a> {
    comment_id: &'a str,
    start: usize,
    end: usize,
    text: &'a str,
    r#trait: crate::matcher::Trait,
    ref_id: &'a str,
    similarity: f64,
}

fn run_match(args: MatchArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let settings = CorpusSettings::resolve(args.input, file)?;
    let mut inputs = BTreeMap::new();
    let corpus_bytes = read_input(&settings.corpus)?;
    let loaded = parse_corpus(
        &corpus_bytes,
        &settings.corpus.display().to_string(),
        settings.limit,
    )?;
    let refs_bytes = read_input(&settings.traits)?;
    let refs = parse_references(&refs_bytes, &settings.traits.display().to_string())?;
    let provider = make_provider(args.embedding, file, &mut inputs)?;
    let matcher = TraitMatcher::new(&refs, settings.threshold, provider.as_ref())?;
    let matches = match_corpus(
        &loaded.comments,
        &matcher,
        provider.as_ref(),
        settings.workers,
    )?;

    let mut table = Vec::new();
    for m in matches.iter().flatten() {
        let row = MatchRow {
            comment_id: &m.sentence.comment_id,
            start: m.sentence.start,
            end: m.sentence.end,
            text: &m.sentence.text,
            r#trait: m.r#trait,
            ref_id: &m.ref_id,
            similarity: m.similarity,
        };
        serde_json::to_writer(&mut table, &row).map_err(Error::from)?;
        table.push(b'\n');
    }
    match args.out.or_else(|| file.out.clone()) {
        Some(path) => write_output(&path, &table)?,
        None => out.write_all(&table)?,
    }
    log::info!(
        "{} matches in {} comments",
        matches.iter().map(Vec::len).sum::<usize>(),
        loaded.comments.len()
    );
    Ok(())
}

/// Summary printed by `stats`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub answerable: usize,
    pub unanswerable: usize,
    pub answerable_fraction: f64,
    pub unanswerable_fraction: f64,
    /// Number of questions keyed by their answer count.
    pub answers_per_question: BTreeMap<usize, usize>,
}

impl DatasetStats {
    pub fn of(dataset: &SquadDataset) -> Self {
        let counts = dataset.counts();
        let mut histogram = BTreeMap::new();
        for (_, q) in dataset.questions() {
            *histogram.entry(q.answers.len()).or_default() += 1;
        }
        let frac = |n: usize| {
            if counts.total == 0 {
                0.0
            } else {
                n as f64 / counts.total as f64
            }
        };
        DatasetStats {
            total: counts.total,
            answerable: counts.answerable,
            unanswerable: counts.unanswerable,
            answerable_fraction: frac(counts.answerable),
            unanswerable_fraction: frac(counts.unanswerable),
            answers_per_question: histogram,
        }
    }
}

fn run_stats(args: StatsArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let path = require(args.dataset.or_else(|| file.dataset.clone()), "dataset")?;
    let dataset = SquadDataset::load(&path)?;
    dataset.validate()?;
    let stats = DatasetStats::of(&dataset);
    if args.json || file.json.unwrap_or(false) {
        serde_json::to_writer_pretty(&mut *out, &stats).map_err(Error::from)?;
        writeln!(out)?;
    } else {
        writeln!(out, "entries       {}", stats.total)?;
        writeln!(
            out,
            "answerable    {} ({:.4})",
            stats.answerable, stats.answerable_fraction
        )?;
        writeln!(
            out,
            "unanswerable  {} ({:.4})",
            stats.unanswerable, stats.unanswerable_fraction
        )?;
        writeln!(out, "answers per question:")?;
        for (answers, questions) in &stats.answers_per_question {
            writeln!(out, "  {answers:>3}  {questions}")?;
        }
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let dataset_path = require(args.dataset.or_else(|| file.dataset.clone()), "dataset")?;
    let predictions_path = require(
        args.predictions.or_else(|| file.predictions.clone()),
        "predictions",
    )?;
    let strict = args.strict || file.strict.unwrap_or(false);
    let dataset = SquadDataset::load(&dataset_path)?;
    let predictions = PredictionSet::load(&predictions_path)?;
    let coverage = if strict {
        Coverage::Strict
    } else {
        Coverage::Lenient
    };
    let evaluation = evaluate_detailed(&dataset, &predictions, coverage)?;
    let report = &evaluation.report;

    let mut json = serde_json::to_vec_pretty(report).map_err(Error::from)?;
    json.push(b'\n');
    if let Some(path) = args.out.or_else(|| file.out.clone()) {
        write_output(&path, &json)?;
    }
    if args.json || file.json.unwrap_or(false) {
        out.write_all(&json)?;
    } else {
        for (key, value) in report.display_rows() {
            writeln!(out, "{key:<13} {value}")?;
        }
    }
    Ok(())
}
