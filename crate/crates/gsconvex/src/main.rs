use clap::{Args, Parser, Subcommand};
use gsconvex::cli;
use std::path::PathBuf;

/// Numerical laboratory for the GS-exponential kind of convex class.
#[derive(Parser)]
#[command(name = "gsconvex", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the report and CSV tables
    #[arg(long)]
    out: PathBuf,
    /// Thread count for parallel sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Seed override for random refinement and solver starts
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Membership sweep against the GS-exponential class
    Check(RunArgs),
    /// Sweeps against all four comparison classes
    Classes(RunArgs),
    /// Minimal modulating-value landscape over endpoint pairs
    MinimalG(RunArgs),
    /// Epigraph equivalence check, both directions
    Epi(RunArgs),
    /// Boundedness scan on one-dimensional domains
    Bounds(RunArgs),
    /// Differentiable-case margin curves
    Diff(RunArgs),
    /// Multi-start projected gradient descent
    Minimize(RunArgs),
    /// Sampled sufficient-optimality certificate at a candidate point
    Certify(RunArgs),
    /// Single-threaded brute-force reference sweep
    Oracle(RunArgs),
}

fn main() {
    let cli = Cli::parse();
    let (sub, args) = match &cli.cmd {
        Cmd::Check(a) => (cli::Subcommand::Check, a),
        Cmd::Classes(a) => (cli::Subcommand::Classes, a),
        Cmd::MinimalG(a) => (cli::Subcommand::MinimalG, a),
        Cmd::Epi(a) => (cli::Subcommand::Epi, a),
        Cmd::Bounds(a) => (cli::Subcommand::Bounds, a),
        Cmd::Diff(a) => (cli::Subcommand::Diff, a),
        Cmd::Minimize(a) => (cli::Subcommand::Minimize, a),
        Cmd::Certify(a) => (cli::Subcommand::Certify, a),
        Cmd::Oracle(a) => (cli::Subcommand::Oracle, a),
    };
    std::process::exit(cli::run(
        sub,
        &args.config,
        &args.out,
        args.threads,
        args.seed,
    ));
}
