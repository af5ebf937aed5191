//! `causonet`: generate response datasets, train operator networks on them,
//! evaluate and compare runs.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! failure, 4 training divergence, 5 architecture/dataset mismatch.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "causonet", version, about = "Operator learning for building response to ground motion")]
struct Cli {
    /// Worker threads. Computation is currently single-threaded; the value
    /// is validated and recorded in the resolved config.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize motions, solve the responses, write train/test datasets.
    Gen(Common),
    /// Train the configured model on a dataset.
    Train(Common),
    /// Evaluate a model file on a dataset.
    Eval(Common),
    /// Train and evaluate several configs; one summary row each.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Additional configs (the first may also come from --config).
        configs: Vec<PathBuf>,
    },
    /// Analytic vs finite-difference gradients of every network type.
    GradCheck(Common),
    /// Causal branch timing: FFT path against explicit windows.
    BenchFft(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("config error: --threads must be >= 1");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Gen(c) => commands::gen(&c, cli.threads),
        Command::Train(c) => commands::train(&c, cli.threads),
        Command::Eval(c) => commands::eval(&c),
        Command::Compare { common, configs } => commands::compare(&common, &configs, cli.threads),
        Command::GradCheck(c) => commands::grad_check(&c),
        Command::BenchFft(c) => commands::bench_fft(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
