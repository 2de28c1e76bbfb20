//! `bestanswer` — predict accepted answers in community Q&A threads from
//! shallow text features and within-question rank discretisation.

pub mod commands;
pub mod config;
pub mod server;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::AppConfig;

#[derive(Parser)]
#[command(
    name = "bestanswer",
    version,
    about = "Best-answer prediction over StackExchange-style data dumps",
    propagate_version = true
)]
pub struct Cli {
    /// TOML config file; $BESTANSWER_CONFIG is used when the flag is absent
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse Posts.xml/Users.xml into a corpus file (JSON lines)
    Ingest(IngestArgs),
    /// Print counts and per-site feature means for corpus files
    Stats(StatsArgs),
    /// Export per-answer feature rows as CSV
    Features(FeaturesArgs),
    /// Train a classifier and write the model + background artifacts
    Train(TrainArgs),
    /// Grouped k-fold evaluation; writes one report per case
    Evaluate(EvaluateArgs),
    /// Export monthly feature drift as CSV
    Drift(DriftArgs),
    /// Score a request file against a trained model
    Predict(PredictArgs),
    /// Serve POST /predict and GET /health over HTTP
    Serve(ServeArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// Extracted Posts.xml (falls back to the config's posts_xml)
    #[arg(long, value_name = "FILE")]
    posts: Option<PathBuf>,
    /// Extracted Users.xml; reputation features need it
    #[arg(long, value_name = "FILE")]
    users: Option<PathBuf>,
    /// Site name recorded in the corpus
    #[arg(long)]
    site: String,
    /// Output corpus path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Keep threads with fewer answers than the configured minimum
    #[arg(long)]
    min_answers: Option<usize>,
    /// Keep threads without an accepted answer
    #[arg(long)]
    include_unresolved: bool,
    /// Keep code/pre contents in answer bodies
    #[arg(long)]
    keep_code: bool,
}

#[derive(Args)]
pub struct StatsArgs {
    /// Corpus file(s); repeat for several sites
    #[arg(long, value_name = "FILE", required = true)]
    corpus: Vec<PathBuf>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Feature case 1-6
    #[arg(long)]
    case: Option<u8>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Feature case 1-6
    #[arg(long)]
    case: Option<u8>,
    /// Model artifact output
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Background model output (default: <out>.background.json)
    #[arg(long, value_name = "FILE")]
    bg_out: Option<PathBuf>,
    /// tree | logistic
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Feature case 1-6
    #[arg(long, conflicts_with = "all_cases")]
    case: Option<u8>,
    /// Evaluate cases 1 through 6
    #[arg(long)]
    all_cases: bool,
    /// Cross-validation folds
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report_caseN.{json,csv} (default: <workdir>/reports)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct DriftArgs {
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Output CSV (default: <workdir>/drift_<site>_<timestamp>.csv)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also emit per-month standard deviation columns
    #[arg(long)]
    std: bool,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Model artifact from `train`
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Background model from `train`
    #[arg(long, value_name = "FILE")]
    bg: PathBuf,
    /// JSON request: {"answers": [{"body", "creation_date", ...}]}
    #[arg(long, value_name = "FILE")]
    request: PathBuf,
    /// Response file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    bg: Option<PathBuf>,
    /// Bind address, e.g. 127.0.0.1:8080
    #[arg(long)]
    addr: Option<String>,
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let config = match AppConfig::load(cli.config.as_deref()) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::FAILURE;
        }
    };
    let result = match &cli.command {
        Command::Ingest(args) => commands::cmd_ingest(&config, args),
        Command::Stats(args) => commands::cmd_stats(&config, args),
        Command::Features(args) => commands::cmd_features(&config, args),
        Command::Train(args) => commands::cmd_train(&config, args),
        Command::Evaluate(args) => commands::cmd_evaluate(&config, args),
        Command::Drift(args) => commands::cmd_drift(&config, args),
        Command::Predict(args) => commands::cmd_predict(&config, args),
        Command::Serve(args) => commands::cmd_serve(&config, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}