use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use aggflow::harness::{self, output};

/// Windowed Picard solver for quasi-incompressible two-phase flow on a periodic box.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Configuration file with `[section]` headers and `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// equilibrium, spinodal, drop_relaxation, matched_density or mms.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory (overrides `run.out_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one key, e.g. `--set solver.dt=5e-5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = harness::load_config(
        args.config.as_deref(),
        args.preset.as_deref(),
        args.out.as_deref(),
        &args.sets,
    )
    .and_then(|cfg| harness::run(&cfg));
    match outcome {
        Ok(report) => {
            let windows = report.windows.len();
            let iters: usize = report.windows.iter().map(|w| w.iterates).sum();
            eprintln!(
                "{}: {} steps in {windows} windows, {iters} Picard iterations",
                report.preset, report.n_steps
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", output::error_json(&e));
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
