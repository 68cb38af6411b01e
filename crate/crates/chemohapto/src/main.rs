use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use chemohapto::config::RunConfig;
use chemohapto::run::{check_to_dir, format_threshold, run_to_dir, Prepared};
use chemohapto::sweep::{confusion_summary, run_sweep, Axis};
use chemohapto::verify::{run_suite, Suite};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chemohapto",
    version,
    about = "Chemotaxis-haptotaxis simulator and boundedness-condition checker"
)]
struct Cli {
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `numerics.threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized presets (overrides `numerics.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write series.csv, field dumps, heatmaps and report.json.
    Run { config: PathBuf },
    /// Evaluate the boundedness condition and write report.json.
    Check { config: PathBuf },
    /// Run a property suite at three refinement levels.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Run a grid of configurations in parallel.
    Sweep {
        config: PathBuf,
        /// `name=start:stop:steps[:log]` with name in chi, mu, k, mass_scale, tau.
        #[arg(long = "axis", required = true)]
        axes: Vec<Axis>,
    },
}

fn load(cli: &Cli, path: &Path) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.numerics.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.numerics.seed = s;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, base) = load(&cli, config)?;
            let dir = cfg.output.dir.clone();
            let prep = Prepared::new(cfg, &base)?;
            let (_, report) = run_to_dir(&prep, &dir)?;
            if let Some(t) = &report.threshold {
                print!("{}", format_threshold(t));
            }
            let run = report.run.as_ref().context("run summary missing")?;
            println!(
                "status {}  classification {}  t {:.6}  steps {}",
                run.status,
                run.classification.as_deref().unwrap_or("-"),
                run.t_final,
                run.steps
            );
            if let Some(f) = &run.failure {
                eprintln!("solver failure: {f}");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config } => {
            let (cfg, base) = load(&cli, config)?;
            let dir = cfg.output.dir.clone();
            let prep = Prepared::new(cfg, &base)?;
            let report = check_to_dir(&prep, &dir)?;
            match (&report.threshold, &report.threshold_error) {
                (Some(t), _) => {
                    print!("{}", format_threshold(t));
                    Ok(ExitCode::SUCCESS)
                }
                (None, e) => {
                    eprintln!("check failed: {}", e.as_deref().unwrap_or("unknown error"));
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Verify { suite } => {
            let report = run_suite(*suite)?;
            print!("{}", report.table());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep { config, axes } => {
            let (cfg, base) = load(&cli, config)?;
            cfg.validate()?;
            let dir = cfg.output.dir.clone();
            let threads = cfg.numerics.threads;
            let results = run_sweep(&cfg, &base, axes, &dir, threads)?;
            print!("{}", confusion_summary(&results));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
