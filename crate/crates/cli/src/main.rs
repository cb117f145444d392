use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::Outcome;

#[derive(Parser, Debug)]
#[command(name = "ontic", version, about = "Checks and simulations for ontological models of two-qubit preparations")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo trials
    #[arg(long, global = true, default_value_t = 100_000)]
    pub trials: u64,

    /// Numerical tolerance for equality checks
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    /// Output file (a directory for toy-search); stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every applicable check on a model file
    Verify {
        #[arg(long)]
        model: PathBuf,
    },
    /// Pairwise distances and overlaps between all preparations
    Distances {
        #[arg(long)]
        model: PathBuf,
    },
    /// Preparation uninformativeness and, on product spaces, no-correlation
    PucCheck {
        #[arg(long)]
        model: PathBuf,
    },
    /// Exhaustive search for the four-box toy model
    ToySearch {
        /// Keep only models where P00 overlaps both P0+ and P+0
        #[arg(long)]
        require_nca_violation: bool,
        /// Keep only models where P00 overlaps P++
        #[arg(long)]
        require_critical_overlap: bool,
        /// Allow masses in multiples of 1/8 when no uniform support exists
        #[arg(long)]
        rational_fallback: bool,
    },
    /// Preclusion theorems on one model, plus the limit over several
    TheoremCheck {
        /// Model file; repeat to check a sequence
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
    },
    /// Simulate the guessing game on the one-slack family
    GameSim {
        /// Number of subsystems
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Probability that the ontic state reveals every preparation
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Preclusion levels for the bound table
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
    },
    /// Extendibility bound table
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon: Vec<f64>,
    },
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Verify { model } => commands::verify(c, model),
        Command::Distances { model } => commands::distances(model),
        Command::PucCheck { model } => commands::puc(c, model),
        Command::ToySearch {
            require_nca_violation,
            require_critical_overlap,
            rational_fallback,
        } => commands::toy_search(ontic_core::toymodel::SearchOptions {
            require_nca_violation: *require_nca_violation,
            require_critical_overlap: *require_critical_overlap,
            rational_fallback: *rational_fallback,
        }),
        Command::TheoremCheck { model } => commands::theorem(model),
        Command::GameSim { n, alpha, epsilon } => commands::game(c, *n, *alpha, epsilon),
        Command::Bounds { epsilon } => commands::bounds(epsilon),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    if let Err(e) = report::emit(&cli.common, &outcome) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
