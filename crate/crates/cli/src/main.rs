use std::path::PathBuf;
use std::process::ExitCode;

use bigzeta_cli::{run, Command, JobConfig};
use clap::{Parser, Subcommand};

/// Reduce big zeta values to multiple zeta values, evaluate and check them.
#[derive(Parser)]
#[command(name = "bigzeta", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Series cutoff (nodes per dimension for `integral`).
    #[arg(long = "N", global = true)]
    cutoff: Option<u64>,
    #[arg(long, global = true, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 100_000)]
    max_terms: usize,
    /// Check every move exactly as it is made.
    #[arg(long, global = true)]
    verify: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the move log here, one JSON object per line.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
}

/// TERM is JSON (`{"rows":[[1,2],[2,3]],"exponents":[1,1,1]}`), the compact
/// form `e1,2 e2,3; k=(1,1,1)`, or a file holding either.
#[derive(Subcommand)]
enum Cmd {
    Validate {
        term: String,
    },
    Converges {
        term: String,
    },
    Reduce {
        term: String,
    },
    Eval {
        term: String,
    },
    Check {
        term: String,
    },
    /// Evaluate a word such as `2,1`.
    Mzv {
        word: String,
    },
    Stuffle {
        u: String,
        v: String,
    },
    Reflect {
        term: String,
    },
    Integral {
        term: String,
    },
    Forest {
        term: String,
    },
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Validate { term } => Command::Validate(term),
        Cmd::Converges { term } => Command::Converges(term),
        Cmd::Reduce { term } => Command::Reduce(term),
        Cmd::Eval { term } => Command::Eval(term),
        Cmd::Check { term } => Command::Check(term),
        Cmd::Mzv { word } => Command::Mzv(word),
        Cmd::Stuffle { u, v } => Command::Stuffle(u, v),
        Cmd::Reflect { term } => Command::Reflect(term),
        Cmd::Integral { term } => Command::Integral(term),
        Cmd::Forest { term } => Command::Forest(term),
        Cmd::Selftest => Command::Selftest,
    };
    let job = JobConfig {
        command,
        cutoff: cli.cutoff,
        tol: cli.tol,
        max_terms: cli.max_terms,
        verify: cli.verify,
        seed: cli.seed,
        trace: cli.trace,
    };
    let outcome = run(&job);
    let text = if cli.pretty {
        serde_json::to_string_pretty(&outcome.json)
    } else {
        serde_json::to_string(&outcome.json)
    }
    .expect("JSON values serialize");
    println!("{text}");
    ExitCode::from(outcome.code)
}
