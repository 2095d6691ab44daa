//! `rrg`: sampling, counting, coupling and the experiment suites from the
//! command line. Reports go to stdout as JSON unless `--output` is given.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rrg", version, about = "Random regular graph experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed.
    #[arg(long, global = true, env = "RRG_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON file overriding any of the size caps and budgets.
    #[arg(long, global = true)]
    pub caps: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw graphs and print them in the text format.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        /// Measure expression such as `mu3`, `nu2` or `mu3+nu2`; defaults to `mu<d>`.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
    /// Perfect matchings, triangles and ordered 1-factorisations of a graph.
    Count {
        /// Graph file in the text format; `-` reads stdin.
        #[arg(long)]
        input: PathBuf,
    },
    /// Exact total variation between two measure expressions.
    Tv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Compare isomorphism-class laws instead of labeled laws.
        #[arg(long)]
        classes: bool,
    },
    #[command(subcommand)]
    Couple(Couple),
    #[command(subcommand)]
    Experiment(Experiment),
    /// Run an acceptance or calibration suite.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
        /// Criteria to run, by name or id.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum Couple {
    /// Maximal coupling of two exact laws.
    Maximal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Draws used to check the agreement rate empirically.
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Max-flow couplings on planted bipartite instances.
    Strassen {
        #[arg(long, default_value_t = 1)]
        instances: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Distance between `mu_d + mu_1` and `mu_{d+1}`.
    Extend {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Estimate by Monte Carlo with this many draws instead of exactly.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Alternative sampling procedure against `nu_{dk}`.
    Asp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Residual recursion between the class laws of `mu_d` and `nu_d`.
    Zeta {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
    },
    /// Coupling of `mu_d` with a stream of `nu_d` draws.
    Complete {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Coupled pairs `G_1 ~ mu_{d1}`, `G_2 ~ mu_{d2}` aiming at `G_1 in G_2`.
    Inclusion {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Use the constant-`d1` construction with this miss budget.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Uniform part of the constant-case carrier.
        #[arg(long, requires = "epsilon")]
        split: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum Experiment {
    /// Moments of the triangle and perfect matching counts.
    Moments {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Stat::Joint)]
        stat: Stat,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Also write one CSV row per (n, d) cell.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tail frequency and relative variance of the matching count.
    Tails {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, default_value_t = 1.1)]
        exponent: f64,
        #[arg(long, default_value_t = 1_000)]
        pilot: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Linear projection of the matching count on the triangle count.
    Projection {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SuiteName {
    Acceptance,
    Calibration,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Stat {
    Pm,
    Triangles,
    Joint,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("rrg: cannot start {w} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("rrg: {e:#}");
            let code = e.downcast_ref::<rrg_core::Error>().map_or(2, rrg_core::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
