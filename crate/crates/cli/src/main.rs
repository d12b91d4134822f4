//! `tvop`: plan routes through depots whose profits change over time.
//!
//! Exit codes: 0 success, 2 usage, 3 validation or malformed documents,
//! 4 unreachable destination, 5 oracle cap exceeded, 6 I/O.

mod commands;

use clap::{Parser, Subcommand};
use commands::{
    CompareArgs, EmitMipArgs, GenerateArgs, IngestArgs, PlotdataArgs, SolveArgs, SweepArgs,
};
use tvop_core::Error;

#[derive(Parser)]
#[command(name = "tvop", version, about = "Orienteering with time-varying profits")]
struct Cli {
    /// Suppress summary output (artifacts are still written).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write its document.
    Generate(GenerateArgs),
    /// Solve an instance with the chosen solver and write the route.
    Solve(SolveArgs),
    /// Compare solvers and oracles over a seed range.
    Compare(CompareArgs),
    /// Solve one fixed-seed instance per (n, dt) cell and tabulate profits.
    SweepDt(SweepArgs),
    /// Export plot-ready vertex geometry with visit order.
    Plotdata(PlotdataArgs),
    /// Emit the instance's integer program in LP text format.
    EmitMip(EmitMipArgs),
    /// Cluster an event CSV into regions and build an instance from it.
    Ingest(IngestArgs),
}

fn error_label(err: &Error) -> &'static str {
    match err {
        Error::NoRoute(_) => "NOROUTE",
        Error::OracleCap { .. } => "CAP",
        Error::Io(_) => "IO",
        _ => "VALIDATION",
    }
}

fn error_code(err: &Error) -> i32 {
    match err {
        Error::NoRoute(_) => 4,
        Error::OracleCap { .. } => 5,
        Error::Io(_) => 6,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args, quiet),
        Command::Solve(args) => commands::solve(args, quiet),
        Command::Compare(args) => commands::compare(args, quiet),
        Command::SweepDt(args) => commands::sweep_dt(args, quiet),
        Command::Plotdata(args) => commands::plotdata(args, quiet),
        Command::EmitMip(args) => commands::emit_mip(args, quiet),
        Command::Ingest(args) => commands::ingest(args, quiet),
    };
    if let Err(err) = result {
        eprintln!("error[{}]: {err}", error_label(&err));
        std::process::exit(error_code(&err));
    }
}
