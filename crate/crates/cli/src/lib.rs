//! `nbdoc`: the notebook documentation pipeline as subcommands.
//!
//! ingest → curate → metrics → index → generate → eval → judge, each reading
//! the previous stage's artifacts from the output directory.

pub mod artifacts;
pub mod config;
pub mod demo;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;
pub use stages::Context;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("stage {stage} failed: {cause}")]
    StageFailed { stage: &'static str, cause: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 1,
            CliError::StageFailed { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nbdoc", version, about = "Generate and evaluate markdown documentation for notebook code cells")]
pub struct Cli {
    /// Pipeline config (TOML). Required by every subcommand except `demo`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use the stub embedder, the echo generator and the mock judge.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Response cache for generator and judge calls.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Notebooks → pairs.jsonl
    Ingest,
    /// pairs.jsonl → curated.jsonl and the curation report
    Curate,
    /// curated.jsonl → metrics.csv and popularity.json
    Metrics,
    /// curated pairs and metrics → splits.json and index.bin
    Index,
    /// index and test split → generations.jsonl
    Generate,
    /// generations.jsonl → eval_report.jsonl and eval_summary.txt
    Eval,
    /// generations.jsonl → judge_scores.jsonl
    Judge,
    /// Runs the two-listing example
    Demo,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if cli.command == Command::Demo => PipelineConfig::default(),
        None => return Err(CliError::ConfigInvalid("--config is required".into())),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.offline {
        cfg.offline = true;
    }
    if let Some(c) = &cli.cache_dir {
        cfg.cache_dir = Some(c.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let with_config = cli.config.is_some();
    let ctx = Context::new(load_config(cli)?);
    match cli.command {
        Command::Ingest => stages::ingest(&ctx).map(drop),
        Command::Curate => stages::curate(&ctx).map(drop),
        Command::Metrics => stages::metrics(&ctx).map(drop),
        Command::Index => stages::index(&ctx).map(drop),
        Command::Generate => stages::generate(&ctx).map(drop),
        Command::Eval => {
            let report = stages::eval(&ctx)?;
            print!("{}", report.summary_text());
            Ok(())
        }
        Command::Judge => stages::judge_stage(&ctx).map(drop),
        Command::Demo => {
            let text = demo::run(&ctx)?;
            print!("{text}");
            if with_config {
                artifacts::write_text(&ctx.path(artifacts::DEMO), &ctx.header, &text)
                    .map_err(|e| CliError::StageFailed { stage: "demo", cause: e.to_string() })?;
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nbdoc: {e}");
            e.exit_code()
        }
    }
}
