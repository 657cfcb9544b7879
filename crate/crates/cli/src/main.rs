use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use compact_mec::ecld::metrics::{read_jsonl, ArticleLabels, QaRecord};
use compact_mec::ecld::pipeline::Corpora;
use compact_mec::ecld::{run_ecld, CompressionReport, EcldConfig, ProfileCatalog};
use compact_mec::env::{run_env_checks, EnvCheckReport};
use compact_mec::trainer::{
    compare, evaluate_checkpoint, hash_json, train_run, write_comparison, Baseline, EvalReport, RunConfig,
};

const ERROR_FILE: &str = "error.json";

#[derive(Debug, Parser)]
#[command(name = "compact-mec", version, about = "Compact-LLM edge offloading: compression, simulation and training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prune, distill and quantize the toy network and write the compression report.
    Compress(CompressArgs),
    /// Run randomized simulator invariant checks.
    EnvCheck(EnvCheckArgs),
    /// Train a policy (or evaluate a static baseline) for every configured seed.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint's mean policy.
    Evaluate(EvaluateArgs),
    /// Train and evaluate all four policies for each user count.
    Compare(CompareArgs),
    /// Write the variant profile catalog.
    ProfileCatalog(CatalogArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    baseline: Option<Baseline>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Seeds trained concurrently.
    #[arg(long, default_value_t = 1)]
    parallel_envs: usize,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[command(flatten)]
    common: Common,
    /// Question-answering records (JSONL) for the offline accuracy score.
    #[arg(long)]
    qa: Option<PathBuf>,
    /// Sentence-level factuality labels (JSONL) for the offline hallucination score.
    #[arg(long)]
    hallucination: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnvCheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Continue from checkpoints in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// User counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
    k: Vec<usize>,
}

#[derive(Debug, Args)]
struct CatalogArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] compact_mec::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct ErrorRecord<'a> {
    status: &'static str,
    command: &'a str,
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn existing(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Usage(format!("config file {} does not exist", path.display())))
    }
}

fn load_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(existing(p)?)?)?),
        None => Ok(T::default()),
    }
}

fn load_run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.common.config {
        Some(p) => RunConfig::load(existing(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.common.seed {
        cfg.seeds = vec![s];
    }
    if let Some(b) = args.baseline {
        cfg.baseline = b;
    }
    if let Some(n) = args.iterations {
        cfg.iterations = n;
    }
    if args.parallel_envs == 0 {
        return Err(CliError::Usage("--parallel-envs must be at least 1".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(read_jsonl(BufReader::new(fs::File::open(path)?))?)
}

#[derive(Serialize)]
struct CompressSummary {
    hallucination: Option<f64>,
    accuracy: f64,
    corpus_accuracy: Option<f64>,
    accessibility_mb: f64,
    storage_ratio: f64,
    energy_estimate: f64,
}

#[derive(Serialize)]
struct CompressOutput<'a> {
    summary: CompressSummary,
    config: &'a EcldConfig,
    report: &'a CompressionReport,
}

fn compress(args: &CompressArgs) -> Result<()> {
    let mut cfg: EcldConfig = load_json(args.common.config.as_deref())?;
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let qa: Option<Vec<QaRecord>> = args.qa.as_deref().map(read_records).transpose()?;
    let labels: Option<Vec<ArticleLabels>> = args.hallucination.as_deref().map(read_records).transpose()?;
    let corpora = match (&qa, &labels) {
        (Some(qa), Some(h)) => Some(Corpora { qa, hallucination: h }),
        (None, None) => None,
        _ => return Err(CliError::Usage("--qa and --hallucination must be given together".into())),
    };
    let report = run_ecld(&cfg, corpora)?;
    let summary = CompressSummary {
        hallucination: report.corpus.as_ref().map(|c| c.hallucination),
        accuracy: report.accuracy.quantized,
        corpus_accuracy: report.corpus.as_ref().map(|c| c.accuracy),
        accessibility_mb: report.storage.compressed_mb,
        storage_ratio: report.storage.ratio,
        energy_estimate: report.energy_estimate,
    };
    fs::create_dir_all(&args.common.out)?;
    let hash = hash_json(&cfg);
    write_json(
        &args.common.out.join("compress_report.json"),
        &Stamped { config_hash: &hash, seed: cfg.seed, body: CompressOutput { summary, config: &cfg, report: &report } },
    )
}

fn env_check(args: &EnvCheckArgs) -> Result<bool> {
    let cfg: RunConfig = match &args.common.config {
        Some(p) => RunConfig::load(existing(p)?)?,
        None => RunConfig::default(),
    };
    let system = cfg.system_config();
    let seed = args.common.seed.unwrap_or(system.seed);
    let report = run_env_checks(&system, seed, args.steps)?;
    fs::create_dir_all(&args.common.out)?;
    let hash = cfg.hash();
    #[derive(Serialize)]
    struct Output<'a> {
        config_hash: &'a str,
        #[serde(flatten)]
        report: &'a EnvCheckReport,
    }
    write_json(&args.common.out.join("env_check.json"), &Output { config_hash: &hash, report: &report })?;
    Ok(report.passed())
}

fn train(args: &TrainArgs) -> Result<()> {
    let cfg = load_run_config(&args.run)?;
    train_run(&cfg, &args.run.common.out, args.run.parallel_envs, args.resume)?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    checkpoint: String,
    report: &'a EvalReport,
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let report = evaluate_checkpoint(&args.checkpoint, args.episodes, args.seed)?;
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(&args.checkpoint)?)?;
    let hash = saved.get("config_hash").and_then(|h| h.as_str()).unwrap_or_default().to_string();
    fs::create_dir_all(&args.out)?;
    write_json(
        &args.out.join("evaluation.json"),
        &Stamped {
            config_hash: &hash,
            seed: report.seed,
            body: EvaluateOutput { checkpoint: args.checkpoint.display().to_string(), report: &report },
        },
    )
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let cfg = load_run_config(&args.run)?;
    if args.k.is_empty() || args.k.contains(&0) {
        return Err(CliError::Usage("--k needs positive user counts".into()));
    }
    let cmp = compare(&cfg, &args.k, args.run.parallel_envs)?;
    write_comparison(&args.run.common.out, &cfg, &cmp)?;
    Ok(())
}

fn profile_catalog(args: &CatalogArgs) -> Result<()> {
    let catalog = match &args.common.config {
        Some(p) => ProfileCatalog::load(existing(p)?)?,
        None => ProfileCatalog::builtin(),
    };
    fs::create_dir_all(&args.common.out)?;
    let hash = hash_json(&catalog);
    #[derive(Serialize)]
    struct Body<'a> {
        profiles: &'a ProfileCatalog,
    }
    write_json(
        &args.common.out.join("profiles.json"),
        &Stamped { config_hash: &hash, seed: args.common.seed.unwrap_or(0), body: Body { profiles: &catalog } },
    )
}

fn out_dir(cmd: &Command) -> &Path {
    match cmd {
        Command::Compress(a) => &a.common.out,
        Command::EnvCheck(a) => &a.common.out,
        Command::Train(a) => &a.run.common.out,
        Command::Evaluate(a) => &a.out,
        Command::Compare(a) => &a.run.common.out,
        Command::ProfileCatalog(a) => &a.common.out,
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Compress(_) => "compress",
        Command::EnvCheck(_) => "env-check",
        Command::Train(_) => "train",
        Command::Evaluate(_) => "evaluate",
        Command::Compare(_) => "compare",
        Command::ProfileCatalog(_) => "profile-catalog",
    }
}

fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Compress(a) => compress(a),
        Command::EnvCheck(a) => {
            if env_check(a)? {
                Ok(())
            } else {
                Err(CliError::Usage("environment checks failed; see env_check.json".into()))
            }
        }
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Compare(a) => compare_cmd(a),
        Command::ProfileCatalog(a) => profile_catalog(a),
    }
}

fn emit_error(command: &str, kind: &str, message: String, out: Option<&Path>) {
    let record = ErrorRecord { status: "error", command, kind, message };
    let line = serde_json::to_string(&record).unwrap_or_else(|_| "{\"status\":\"error\"}".into());
    eprintln!("{line}");
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(dir.join(ERROR_FILE), format!("{line}\n"));
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            emit_error("", "usage", first.to_string(), None);
            return ExitCode::from(2);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(name(&cli.command), e.kind(), e.to_string(), Some(out_dir(&cli.command)));
            ExitCode::FAILURE
        }
    }
}
