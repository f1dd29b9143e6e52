//! `wlift`: command-line front-end for the lift library.
//!
//! Exit codes: 0 success, 1 negative answer (incompatible measures, no
//! continuous lift), 2 input error, 3 resource limit.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "wlift", version, about = "Optimal transport, compatibility and lifts of measure curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// W_p between two measures, optionally with the optimal coupling.
    Ot(commands::OtArgs),
    /// Decide compatibility of finitely many measures.
    Compat(commands::CompatArgs),
    /// Run Construction A or B over a range of levels and report diagnostics.
    Lift(commands::LiftArgs),
    /// Path or curve seminorms.
    Norms(commands::NormsArgs),
    /// Dynamic identity for the geodesic lift of a coupling.
    Bb(commands::BbArgs),
    /// Sample one of the built-in families and print its reference values.
    Example(commands::ExampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Transport order; defaults to the family's own value, else 2.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.75)]
    pub alpha: f64,
    /// Hölder exponent.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Variation exponent; defaults to p.
    #[arg(long)]
    pub q: Option<f64>,
    /// Modulus-of-continuity window.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Dyadic level of the sampling grid.
    #[arg(long)]
    pub level: Option<u32>,
    /// Levels as `1..5`, `1..=5` or `1,2,3`.
    #[arg(long)]
    pub levels: Option<String>,
    /// Truncation level M of dyadic series.
    #[arg(long = "truncation", short = 'M')]
    pub truncation: Option<u32>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// `line`, `plane`, `euclidean:<d>`, `circle`, `cylinder` or a JSON space.
    #[arg(long)]
    pub space: Option<String>,
    /// Built-in family name or a JSON family spec file.
    #[arg(long)]
    pub family: Option<String>,
    /// Family parameter as `key=value`, repeatable.
    #[arg(long = "param", value_name = "KEY=VAL")]
    pub params: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ot(a) => commands::ot(a),
        Command::Compat(a) => commands::compat(a),
        Command::Lift(a) => commands::lift(a),
        Command::Norms(a) => commands::norms(a),
        Command::Bb(a) => commands::bb(a),
        Command::Example(a) => commands::example(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
