//! `hybrbf`: batch front end for fitting, evaluating, optimizing and
//! benchmarking hybrid Gaussian-cubic RBF interpolants.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrbf::harness::ExperimentKind;

use commands::{BenchArgs, Layout, TruthFn};
use config::{RunConfig, Shared, UsageError};

const AFTER_HELP: &str = "Option precedence: command-line flags override values from --config, \
which override built-in defaults.\n\
Point files are CSV with header x1,...,xs[,value]; numbers are written with 17 significant digits.\n\
Exit status: 0 on success, 1 on a numerical or I/O failure, 2 on invalid usage or configuration.";

#[derive(Debug, Parser)]
#[command(name = "hybrbf", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an interpolant with a fixed kernel and write the model file
    #[command(after_help = AFTER_HELP)]
    Fit {
        /// Data CSV with a value column
        #[arg(long)]
        input: PathBuf,
        /// Model file to write
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Evaluate a model file at target points
    #[command(after_help = AFTER_HELP)]
    Eval {
        /// Model file written by `fit`
        #[arg(long)]
        model: PathBuf,
        /// Target points CSV (a value column, if present, is ignored)
        #[arg(long)]
        input: PathBuf,
        /// Values CSV to write, one row per target in input order
        #[arg(long)]
        output: PathBuf,
    },
    /// Search kernel parameters with particle swarm optimization
    #[command(after_help = AFTER_HELP)]
    Optimize {
        /// Data CSV with a value column
        #[arg(long)]
        input: PathBuf,
        /// Best-parameter file (TOML) to write
        #[arg(long)]
        output: PathBuf,
        /// Per-generation trace CSV [default: <output stem>-trace.csv]
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Reference for the rms objective: franke, linear, or a CSV with values
        #[arg(long)]
        truth: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Run one of the benchmark studies and write its reports
    #[command(after_help = AFTER_HELP)]
    Bench {
        /// linear-reproduction, franke-convergence, spectra, objective-comparison, scaling or fault
        #[arg(long)]
        study: ExperimentKind,
        /// Directory for report files
        #[arg(long, default_value = "reports")]
        output: PathBuf,
        /// Node counts, comma separated
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Use the full-size node counts instead of the desk-scale ones
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        shared: Shared,
    },
    /// Write a sample point set
    Generate {
        #[arg(long, value_enum, default_value = "grid")]
        layout: Layout,
        /// Number of points (a perfect square for the grid layout)
        #[arg(long)]
        n: usize,
        /// Values to attach; ignored for the fault layout
        #[arg(long, value_enum, default_value = "franke")]
        truth: TruthFn,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit {
            input,
            output,
            shared,
        } => commands::fit_cmd(&RunConfig::resolve(&shared)?, &input, &output),
        Command::Eval {
            model,
            input,
            output,
        } => commands::eval_cmd(&model, &input, &output),
        Command::Optimize {
            input,
            output,
            trace,
            truth,
            shared,
        } => commands::optimize_cmd(
            &RunConfig::resolve(&shared)?,
            &input,
            &output,
            trace.as_deref(),
            truth.as_deref(),
        ),
        Command::Bench {
            study,
            output,
            n,
            full,
            shared,
        } => commands::bench_cmd(
            &RunConfig::resolve(&shared)?,
            &BenchArgs {
                study,
                output: &output,
                node_counts: n,
                full,
            },
        ),
        Command::Generate {
            layout,
            n,
            truth,
            seed,
            output,
        } => commands::generate_cmd(layout, n, truth, seed, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(
                    e.downcast_ref::<hybrbf::RbfError>(),
                    Some(hybrbf::RbfError::Config(_))
                );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
