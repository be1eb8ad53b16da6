mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use commands::{Ctx, EvalArgs, EvalMode};
use config::RunConfig;
use error::CliError;

/// Transfer chat toxicity labels with an LLM annotator, evaluate, sample and
/// assemble classifier inputs.
#[derive(Parser)]
#[command(name = "labelbridge", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict to one registry source.
    #[arg(long, global = true)]
    source: Option<String>,
    /// Use the scripted mock backend instead of the HTTP endpoint.
    #[arg(long, global = true)]
    mock: bool,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load registry sources into canonical records.
    Ingest,
    /// Estimate annotation cost without calling the endpoint.
    Cost,
    /// Annotate every record and store the raw responses.
    Annotate,
    /// Annotate (or reuse responses) and keep lines where human and LLM agree.
    Transfer {
        /// Reuse responses from an earlier `annotate` run.
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Score predictions against gold labels.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "filter")]
        mode: EvalMode,
        /// Select the "LLM toxic" subset by gold label instead of prediction.
        #[arg(long)]
        gold_basis: bool,
        /// Count zero-support classes in the macro mean.
        #[arg(long)]
        include_zero_support: bool,
    },
    /// Draw stratified evaluation samples per game and language.
    Sample {
        #[arg(long)]
        pool: PathBuf,
    },
    /// Build classifier input sequences with game tokens.
    Assemble {
        #[arg(long)]
        input: PathBuf,
        /// Treat the input as unified rows from `transfer`, all from this origin.
        #[arg(long)]
        unified_origin: Option<String>,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(&commands::resolve_against_cwd(p))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = commands::resolve_against_cwd(out);
    }
    let ctx = Ctx {
        cfg,
        source: cli.source,
        mock: cli.mock,
    };
    match &cli.command {
        Command::Ingest => commands::ingest(&ctx),
        Command::Cost => commands::cost(&ctx),
        Command::Annotate => commands::annotate(&ctx),
        Command::Transfer { responses } => commands::transfer(&ctx, responses.as_deref()),
        Command::Eval {
            gold,
            pred,
            mode,
            gold_basis,
            include_zero_support,
        } => commands::eval(
            &ctx,
            &EvalArgs {
                gold,
                pred,
                mode: *mode,
                gold_basis: *gold_basis,
                include_zero_support: *include_zero_support,
            },
        ),
        Command::Sample { pool } => commands::sample(&ctx, pool),
        Command::Assemble { input, unified_origin } => commands::assemble(&ctx, input, unified_origin.as_deref()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
