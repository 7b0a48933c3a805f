//! `shapeflow`: rasterize phantoms, evolve surfaces down the shape gradient,
//! extract Marching Cubes baselines, and report mesh metrics.
//!
//! Exit codes: 0 success, 2 argument error, 3 I/O error, 4 numerical abort.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{CurvatureArgs, EvolveArgs, McubesArgs, MetricsArgs, PhantomArgs};

#[derive(Parser)]
#[command(name = "shapeflow", version, about = "Surface reconstruction from level-set volumes")]
struct Cli {
    /// Worker thread cap (env SHAPEFLOW_THREADS takes precedence); defaults
    /// to the hardware parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize an analytic phantom to an SDF1 grid file, optionally noisy.
    Phantom(PhantomArgs),
    /// Evolve a triangulated sphere onto the zero level set.
    Evolve(EvolveArgs),
    /// Extract the Marching Cubes baseline surface from a grid.
    Mcubes(McubesArgs),
    /// Per-vertex mean curvature of a mesh, written as a PLY quality channel.
    Curvature(CurvatureArgs),
    /// Mesh-vs-field metrics report (JSON).
    Metrics(MetricsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    init_threads(cli.threads);

    let result = match cli.command {
        Command::Phantom(args) => commands::run_phantom(&args),
        Command::Evolve(args) => commands::run_evolve(&args),
        Command::Mcubes(args) => commands::run_mcubes(&args),
        Command::Curvature(args) => commands::run_curvature(&args),
        Command::Metrics(args) => commands::run_metrics(&args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shapeflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("SHAPEFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = from_env.or(flag) {
        if n > 0 {
            // Ignore failure: the global pool can only be set once, which is
            // fine for a one-command process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
