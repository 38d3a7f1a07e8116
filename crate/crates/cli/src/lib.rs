//! Staged driver: `validate`, `harvest`, `extract`, `match`, `batch-build`,
//! `classify`, `analyze` and `report`, each writing one output directory
//! with a manifest.

pub mod config;
mod io;
pub mod lock;
pub mod manifest;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{parse_config, validate_config, PipelineConfig, DEFAULT_CONFIG};

/// Looked up in the working directory when `--config` is not given.
pub const LOCAL_CONFIG: &str = "sacreddetect.toml";

#[derive(Debug, Parser)]
#[command(name = "sacreddetect", version, about = "Detect religious language in NGO web corpora")]
pub struct Cli {
    /// Pipeline configuration (TOML). Defaults to ./sacreddetect.toml, else the bundled nine-NGO config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's output_root.
    #[arg(long, global = true)]
    pub output_root: Option<PathBuf>,
    /// Use the offline stub instead of live LLM providers.
    #[arg(long, global = true)]
    pub stub: bool,
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the configuration and lexicon.
    Validate,
    /// Query the CDX index and fetch live pages into raw/.
    Harvest(HarvestArgs),
    /// Clean, language-filter and segment raw documents into corpus/.
    Extract(ExtractArgs),
    /// Label every sentence with the lexicon tree into labels/tree/.
    Match(MatchArgs),
    /// Write batch request files into batches/<model>/.
    BatchBuild(BatchBuildArgs),
    /// Run the LLM judges into labels/<model>/.
    Classify(ClassifyArgs),
    /// Join all labels and compute statistics into analysis/.
    Analyze(AnalyzeArgs),
    /// Render tables and audits into reports/.
    Report,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HarvestArgs {
    /// Requests per second per host.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub retries: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Continue an interrupted harvest, keeping fetched documents.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, hide = true)]
    pub cdx_endpoint: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExtractArgs {
    /// Accept a raw store that was not produced by `harvest`.
    #[arg(long)]
    pub skip_harvest: bool,
    /// Read raw documents from this directory instead of <output_root>/raw (implies --skip-harvest).
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MatchArgs {
    /// Lexicon file (tree text or JSON export); defaults to the config's.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Corpus directory; defaults to <output_root>/corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory; defaults to <output_root>/labels/tree.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BatchBuildArgs {
    /// Restrict to these model ids (repeatable).
    #[arg(long)]
    pub model: Vec<String>,
    /// Prompt template: general or revised.
    #[arg(long)]
    pub template: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClassifyArgs {
    /// Restrict to these model ids (repeatable).
    #[arg(long)]
    pub model: Vec<String>,
    /// openai-batch, groq-batch or stub; overrides the config.
    #[arg(long)]
    pub provider: Option<String>,
    /// Prompt template: general or revised.
    #[arg(long)]
    pub template: Option<String>,
    /// Require the whole response to be the JSON object.
    #[arg(long)]
    pub strict_json: bool,
    /// Keep NGOs that already have a complete label file.
    #[arg(long)]
    pub resume: bool,
    /// Seconds between batch status polls.
    #[arg(long, default_value_t = 30)]
    pub poll_secs: u64,
    /// Give up waiting after this many hours; state is kept for --resume.
    #[arg(long, default_value_t = 24)]
    pub max_wait_hours: u64,
    #[arg(long, hide = true)]
    pub base_url: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    /// Analyze tree labels only.
    #[arg(long)]
    pub tree_only: bool,
    /// Phrases for term reports (repeatable); defaults to the config's terms.
    #[arg(long = "term")]
    pub terms: Vec<String>,
    /// Sample sentences per term report.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
}

/// Stage failure, mapped to the process exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing prerequisite: {0}")]
    Prereq(String),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("{0}")]
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Prereq(_) => 3,
            Failure::Provider(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let cfg = match &cli.config {
        Some(p) => validate_config(p),
        None if Path::new(LOCAL_CONFIG).is_file() => validate_config(Path::new(LOCAL_CONFIG)),
        None => parse_config(DEFAULT_CONFIG, Path::new("")),
    };
    let mut cfg = cfg.map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(root) = &cli.output_root {
        cfg.output_root = root.clone();
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    if let Command::Validate = cli.command {
        return stages::validate(&cfg);
    }
    let lock = lock::RootLock::acquire(&cfg.output_root).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Failure::Other(format!(
                "another stage is running on {} (remove {} if that run is gone)",
                cfg.output_root.display(),
                cfg.output_root.join(lock::LOCK_FILE).display()
            ))
        } else {
            Failure::Other(format!("{}: {e}", cfg.output_root.display()))
        }
    })?;
    let ctx = stages::Ctx::new(cfg, cli.stub);
    let result = match &cli.command {
        Command::Validate => unreachable!(),
        Command::Harvest(a) => stages::harvest(&ctx, a),
        Command::Extract(a) => stages::extract(&ctx, a),
        Command::Match(a) => stages::match_stage(&ctx, a),
        Command::BatchBuild(a) => stages::batch_build(&ctx, a),
        Command::Classify(a) => stages::classify(&ctx, a),
        Command::Analyze(a) => stages::analyze(&ctx, a),
        Command::Report => stages::report(&ctx),
    };
    drop(lock);
    result
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp_secs()
        .try_init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
