use std::process::ExitCode;

use clap::{Parser, Subcommand};
use voxlines_cli::{cmd_bench, cmd_build, cmd_render, cmd_stats, BenchArgs, BuildArgs, RenderArgs, StatsArgs};

#[derive(Parser)]
#[command(name = "voxlines", version, about = "Voxelized transparent streamline rendering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a .tck file and write a scene file with precomputed orders.
    Build(BuildArgs),
    /// Render a scene to a PPM image.
    Render(RenderArgs),
    /// Report ordering accuracy of the approximate order against the exact sort.
    Stats(StatsArgs),
    /// Time each stage from file load to the first rendered frame.
    Bench(BenchArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Build(args) => {
            let report = cmd_build(&args)?;
            if report.dropped_streamlines > 0 {
                eprintln!(
                    "warning: dropped {} streamlines with fewer than 2 points",
                    report.dropped_streamlines
                );
            }
            println!("{report}");
        }
        Command::Render(args) => {
            let img = cmd_render(&args)?;
            println!("wrote {} ({}x{})", args.output.display(), img.width(), img.height());
        }
        Command::Stats(args) => {
            let report = cmd_stats(&args)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
        }
        Command::Bench(args) => {
            let report = cmd_bench(&args)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
