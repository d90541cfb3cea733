mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

/// Quality estimation for simultaneous interpretation: METEOR labels,
/// interpreter-aware features, SVR regression and cross-validated
/// evaluation.
#[derive(Debug, Parser)]
#[command(name = "interpqe", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed for folds, bootstrap and corpus generation [default: 20240601]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (score, extract, predict) or directory (other commands)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Comma-separated manifests: baseline, trimmed, proposed
    #[arg(long, global = true, value_delimiter = ',')]
    pub manifests: Option<Vec<String>>,
    /// Corpus file (JSON lines); repeat for several datasets
    #[arg(long, global = true, value_name = "FILE")]
    pub corpus: Vec<PathBuf>,
    /// Directory of `<lang>.txt` filler lexicons replacing the built-in ones
    #[arg(long, global = true, value_name = "DIR")]
    pub fillers: Option<PathBuf>,
    /// Directory of `<lang>.txt` non-specific word lists replacing the built-in ones
    #[arg(long = "seed-lists", global = true, value_name = "DIR")]
    pub seed_lists: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct MeteorArgs {
    /// Precision/recall balance of the metric [default: 0.9]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fragmentation exponent [default: 3]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fragmentation penalty weight [default: 0.5]
    #[arg(long = "gamma-pen")]
    pub gamma_pen: Option<f64>,
    /// Matcher stages, comma-separated: exact[,stem] [default: exact,stem]
    #[arg(long, value_delimiter = ',')]
    pub matchers: Option<Vec<String>>,
}

#[derive(Debug, Args, Default)]
pub struct SvrArgs {
    /// SVR cost; with --epsilon and --kernel-gamma fixes the hyperparameters instead of grid search
    #[arg(long = "C", alias = "c")]
    pub c: Option<f64>,
    /// Width of the insensitive tube
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// RBF kernel coefficient
    #[arg(long = "kernel-gamma")]
    pub kernel_gamma: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Number of folds [default: 10]
    #[arg(long)]
    pub k: Option<usize>,
    /// Bootstrap resamples [default: 10000]
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Skip the cumulative ablation
    #[arg(long = "no-ablation")]
    pub no_ablation: bool,
    #[command(flatten)]
    pub svr: SvrArgs,
    #[command(flatten)]
    pub meteor: MeteorArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate corpora and summarize their annotations
    Ingest,
    /// Write METEOR labels (`utterance_id`, `meteor`, `matches`, `chunks`)
    Score {
        #[command(flatten)]
        meteor: MeteorArgs,
    },
    /// Write a feature table for one manifest
    Extract {
        /// Directory with trained resources; trains on the corpus itself when absent
        #[arg(long, value_name = "DIR")]
        resources: Option<PathBuf>,
        #[command(flatten)]
        meteor: MeteorArgs,
    },
    /// Train one model on a corpus and save it with its resources
    Train {
        #[command(flatten)]
        svr: SvrArgs,
        #[command(flatten)]
        meteor: MeteorArgs,
    },
    /// Predict scores with a saved model
    Predict {
        /// Saved `model.json` (its directory must hold the resources)
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Clamp predictions to [0, 1]
        #[arg(long)]
        clamp: bool,
    },
    /// Cross-validate manifests and report mean test correlations
    Evaluate(ExperimentArgs),
    /// Cumulative ablation of the proposed manifest
    Ablate(ExperimentArgs),
    /// Generate synthetic corpora, one file per language pair
    Synth {
        /// Comma-separated language pairs [default: en-ja,en-fr,en-it]
        #[arg(long, value_delimiter = ',')]
        pairs: Option<Vec<String>>,
        /// Records per corpus [default: 600]
        #[arg(long)]
        n: Option<usize>,
        /// mixed, fillers, length, clean or silent [default: mixed]
        #[arg(long)]
        profile: Option<String>,
    },
    /// Full run: cross-validation, ablation and significance tests
    Experiment(ExperimentArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    commands::run(cli)
}
