//! Batch driver for `minrec`: reads an experiment config, runs one command and
//! writes `report.json`, an optional `density.csv` and `timing.json`.

pub mod commands;
pub mod config;
pub mod exit;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use minrec_core::returns::write_csv;
use serde::Serialize;

pub use commands::{Command, RunReport};
pub use config::ExperimentConfig;
pub use exit::{ExitCode, Failure};

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "density.csv";
pub const TIMING_FILE: &str = "timing.json";

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

/// Wall-clock data, kept out of the report so reports stay bit-identical.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub command: Command,
    pub config_digest: String,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(w) = overrides.workers {
        config.workers = Some(w);
    }
    if let Some(s) = overrides.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// Runs `command` on a pool of `config.workers` threads (all cores by default).
pub fn execute(command: Command, config: &ExperimentConfig) -> Result<(RunReport, Timing), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::new(ExitCode::Other, format!("thread pool: {e}")))?;
    let started = Instant::now();
    let report = pool.install(|| commands::run(command, config))?;
    let timing = Timing {
        command,
        config_digest: report.config_digest.clone(),
        workers: pool.current_num_threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((report, timing))
}

pub fn output_dir(config: &ExperimentConfig, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| config.output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_outputs(dir: &Path, report: &RunReport, timing: &Timing) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(&format!("creating {}", dir.display()), e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Failure::io(&format!("writing {}", p.display()), e))
    };
    write(REPORT_FILE, report_json(report).as_bytes())?;
    if matches!(report.command, Command::Bound | Command::Density | Command::Flow) {
        let mut buf = Vec::new();
        write_csv(&report.csv, &mut buf).map_err(Failure::core)?;
        write(CSV_FILE, &buf)?;
    }
    let mut t = serde_json::to_string_pretty(timing).expect("timing serializes");
    t.push('\n');
    write(TIMING_FILE, t.as_bytes())
}

/// The whole pipeline; the returned code is the process exit status.
pub fn main_with(command: Command, config_path: &Path, overrides: &Overrides) -> Result<ExitCode, Failure> {
    let config = load_config(config_path, overrides)?;
    let (report, timing) = execute(command, &config)?;
    write_outputs(&output_dir(&config, overrides), &report, &timing)?;
    Ok(report.status)
}
