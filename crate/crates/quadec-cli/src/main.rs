//! `quadec`: decoupling exponents of quadratic form tuples from the command
//! line.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure (including
//! open table cells under `--require-exact`).

mod commands;
mod config;
mod selftest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Overrides};

#[derive(Debug, Parser)]
#[command(name = "quadec", version, about = "Decoupling exponents for tuples of quadratic forms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Search budget as FLAGS,RESTARTS.
    #[arg(long, global = true, value_parser = config::parse_budget)]
    pub budget: Option<(usize, usize)>,
    /// Structured routes only, no randomized search.
    #[arg(long, global = true)]
    pub exact_only: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, env = "QUADEC_JOBS")]
    pub jobs: Option<usize>,
    /// File of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Byte cap for counting tables.
    #[arg(long, global = true)]
    pub memory_cap: Option<u64>,
    /// Treat open table cells as a verification failure.
    #[arg(long, global = true)]
    pub require_exact: bool,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            random_flags: self.budget.map(|b| b.0),
            restarts: self.budget.map(|b| b.1),
            exact_only: self.exact_only.then_some(true),
            memory_cap: self.memory_cap,
            format: self.format,
            out: self.out.clone(),
            require_exact: self.require_exact.then_some(true),
            jobs: self.jobs,
        }
    }
}

/// A tuple in formlang or JSON; `@path` reads it from a file.
#[derive(Debug, Args)]
pub struct TupleArg {
    pub tuple: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The full nv table with certificates.
    Numvar(TupleArg),
    /// Γ_{q,p} at one point.
    Gamma {
        #[command(flatten)]
        input: TupleArg,
        /// Defaults to p.
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        p: String,
    },
    /// Γ as a function of p, with kinks and branch labels.
    GammaGraph {
        #[command(flatten)]
        input: TupleArg,
        /// Fixed q.
        #[arg(long, conflicts_with = "qp")]
        q: Option<String>,
        /// Follow q = p (the default).
        #[arg(long)]
        qp: bool,
        /// Also write the SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Strong, plain and weak non-degeneracy.
    Classify(TupleArg),
    /// Critical exponent p_c of best possible decoupling.
    Pc(TupleArg),
    /// The exponent p_Q beyond which restriction estimates hold.
    RestrictionRange(TupleArg),
    /// Exact solution counts J(W) and a growth fit.
    Count {
        #[command(flatten)]
        input: TupleArg,
        #[arg(long)]
        s: usize,
        /// Comma-separated W values; `a..b` ranges are inclusive.
        #[arg(long = "W", value_name = "LIST")]
        w: String,
        /// Recount small cases by direct enumeration.
        #[arg(long)]
        naive_oracle: bool,
    },
    /// The 2s-th power of the L^{2s} norm of the exponential sum.
    Expsum {
        #[command(flatten)]
        input: TupleArg,
        #[arg(long)]
        s: usize,
        #[arg(long = "W", value_name = "W")]
        w: u64,
    },
    /// Randomized invariance checks. Without a tuple, runs the linear
    /// algebra suites instead.
    Fuzz {
        tuple: Option<String>,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Golden cases with known answers.
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("quadec: {e}");
            ExitCode::from(e.code())
        }
        Err(_) => {
            eprintln!("quadec: internal error");
            ExitCode::from(2)
        }
    }
}
