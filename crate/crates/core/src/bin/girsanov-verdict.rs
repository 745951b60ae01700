//! Command-line driver: one task, one JSON configuration, one JSON report.
//!
//! Exit status is 0 on a decisive pass, 2 on an inconclusive outcome and 1
//! on failure or error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use girsanov_verdict::harness::{canonical_json, load_config, run, write_csv, write_json, HarnessError, Task};

#[derive(Debug, Parser)]
#[command(name = "girsanov-verdict", version, about = "Decide whether a Girsanov density is a true martingale")]
struct Cli {
    /// classify1d, classify-radial, khasminskii, growth-check, boundary, simulate or cross-validate.
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the CSV tables.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Add the wall-clock time to the report (breaks byte determinism).
    #[arg(long)]
    timing: bool,
}

fn main_inner(cli: Cli) -> Result<i32, HarnessError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| HarnessError::Io {
        path: cli.config.clone(),
        message: e.to_string(),
    })?;
    let mut cfg = load_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(n) = cli.paths {
        cfg.mc.n_paths = n;
    }
    if let Some(dt) = cli.dt {
        cfg.mc.dt = dt;
    }
    let out = cli.out.or_else(|| cfg.output.path.clone());
    let csv = cli.csv.or_else(|| cfg.output.csv_dir.clone());
    let start = Instant::now();
    let mut report = run(&cfg, Some(cli.task))?;
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    match &out {
        Some(path) => write_json(&report, path)?,
        None => print!("{}", canonical_json(&report)),
    }
    if let Some(dir) = &csv {
        write_csv(&report, dir)?;
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors exit 1; 2 is reserved for inconclusive outcomes.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
