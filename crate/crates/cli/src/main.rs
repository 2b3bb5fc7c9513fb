use std::path::PathBuf;

use clap::{Parser, Subcommand};
use minrec_cli::{main_with, Command, ExitCode, Overrides};

#[derive(Parser)]
#[command(name = "minrec", version, about = "Recurrence frequency bounds for minimal systems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed for sampled checks; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Certified uniform lower bound against measured window frequencies.
    Bound,
    /// Minimum window frequency as a function of W, per base point.
    Density,
    /// Box defects and the intersection / density lemmas.
    Folner,
    /// Uniform bound for a linear torus flow plus a quadrature cross-check.
    Flow,
    /// Equicontinuity defect of the annulus example.
    Probe,
}

fn main() {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Bound => Command::Bound,
        Sub::Density => Command::Density,
        Sub::Folner => Command::Folner,
        Sub::Flow => Command::Flow,
        Sub::Probe => Command::Probe,
    };
    let Some(config) = cli.config else {
        let f = minrec_cli::Failure::config_msg("--config PATH is required".into());
        eprintln!("{}", f.to_json());
        std::process::exit(f.status);
    };
    let overrides = Overrides {
        out: cli.out,
        workers: cli.workers,
        seed: cli.seed,
    };
    match main_with(command, &config, &overrides) {
        Ok(code) => {
            if code != ExitCode::Ok {
                let f = minrec_cli::Failure::new(code, "a certified bound or cross-check failed; see report.json".into());
                eprintln!("{}", f.to_json());
            }
            std::process::exit(code.status());
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            std::process::exit(f.status);
        }
    }
}
