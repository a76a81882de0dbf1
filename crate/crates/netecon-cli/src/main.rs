mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "netecon",
    about = "Networked market economy simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and export its time series
    Run(commands::RunArgs),
    /// Run a seed grid across a worker pool
    Sweep(commands::SweepArgs),
    /// Aggregate a sweep's output into an outcome table
    Summarize(commands::SummarizeArgs),
    /// Export a stored state snapshot as a DOT graph
    ExportGraph(commands::ExportGraphArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Summarize(args) => commands::summarize(args),
        Command::ExportGraph(args) => commands::export_graph(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
