use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lorwave_cli::{run_file, Overrides, EXIT_ERROR, EXIT_FAILED, EXIT_PASS};

#[derive(Parser)]
#[command(name = "lorwave", version, about = "Wave equations on 1+1 globally hyperbolic spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Cauchy problem and write snapshots.
    SolveCauchy(Common),
    /// Solve a characteristic initial value problem.
    SolveGoursat(Common),
    /// Fit Grönwall constants for the energy estimate at N and 2N.
    VerifyEnergy(Common),
    /// Check Green's formula on a characteristic surface.
    VerifyGreen(Common),
    /// Empirical constants of the slab estimate at N and 2N.
    VerifySlab(Common),
    /// Spatial and temporal convergence against an exact solution.
    Convergence(Common),
    /// The travelling wave with vanishing trace on a null line.
    Counterexample(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory, default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for random test sections.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of spatial nodes (overrides discretization.n).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::SolveCauchy(c) => ("solve-cauchy", c),
        Command::SolveGoursat(c) => ("solve-goursat", c),
        Command::VerifyEnergy(c) => ("verify-energy", c),
        Command::VerifyGreen(c) => ("verify-green", c),
        Command::VerifySlab(c) => ("verify-slab", c),
        Command::Convergence(c) => ("convergence", c),
        Command::Counterexample(c) => ("counterexample", c),
    };
    let overrides = Overrides {
        out_dir: common.out_dir.clone(),
        seed: common.seed,
        resolution: common.resolution,
    };
    match run_file(name, &common.config, &overrides) {
        Ok((outcome, dir)) => {
            if !common.quiet {
                let verdict = if outcome.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {name}: {}", outcome.summary);
                println!("report: {}", dir.join("report.json").display());
            }
            ExitCode::from(if outcome.passed { EXIT_PASS } else { EXIT_FAILED })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
