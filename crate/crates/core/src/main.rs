use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use qrforms::suite::{emit_report, render_report, run_suite, ReportFormat, SuiteConfig, SuiteName};
use qrforms::Result;

#[derive(Parser)]
#[command(
    name = "qrforms",
    version,
    about = "Verification suites for quasiregular maps and Sobolev forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites selected by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the suites listed in the config.
        #[arg(long)]
        suite: Option<String>,
        /// Replaces the resolutions listed in the config.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        format: Option<String>,
        /// Directory for `report.json` / `report.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(command: Command) -> Result<SuiteConfig> {
    let Command::Run {
        config,
        suite,
        resolution,
        seed,
        format,
        out,
    } = command;
    let mut cfg = SuiteConfig::from_path(&config)?;
    if let Some(s) = suite {
        cfg.suites = vec![s.parse::<SuiteName>()?];
    }
    if let Some(r) = resolution {
        cfg.resolutions = vec![r];
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = format {
        cfg.format = f.parse::<ReportFormat>()?;
    }
    if out.is_some() {
        cfg.output = out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cfg.output {
        Some(dir) => emit_report(&report, cfg.format, dir).map(Some),
        None => render_report(&report, cfg.format).map(|text| {
            print!("{text}");
            None
        }),
    };
    match written {
        Ok(Some(path)) => eprintln!("report written to {}", path.display()),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    for c in report.failures() {
        eprintln!("FAIL {} value={} tolerance={}", c.id, c.value, c.tolerance);
    }
    eprintln!(
        "{} passed, {} failed in {:.1} s",
        report.summary.pass,
        report.summary.fail,
        start.elapsed().as_secs_f64()
    );
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
