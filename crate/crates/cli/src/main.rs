use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use orbitlab::harness::{self, coverage_ledger};
use orbitlab::{Error, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "orbitlab", version, about = "Verification suites and h-sweeps for orbitlab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite (or `all`) and report every check.
    Verify {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also print the anchor -> check coverage ledger.
        #[arg(long)]
        coverage: bool,
    },
    /// Run an h-sweep and write `<experiment>.csv` and `<experiment>.dat`.
    Sweep {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to `run.output` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List suites, their checks and the sweep experiments.
    List,
}

/// Exit status for a failed command: 2 for configuration and usage errors, 1 otherwise.
fn status(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. } | Error::UnknownSuite(_)) => 2,
        _ => 1,
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("ORBITLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| Error::Config {
        line: None,
        field: "ORBITLAB_THREADS".into(),
        message: format!("expected a positive integer, got '{value}'"),
    })?;
    if threads == 0 {
        return Err(Error::Config {
            line: None,
            field: "ORBITLAB_THREADS".into(),
            message: "must be at least 1".into(),
        }
        .into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")
}

fn verify(suite: &str, config: Option<&Path>, seed: Option<u64>, coverage: bool) -> anyhow::Result<bool> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = harness::run_suite(suite, &cfg)?;
    print!("{}", result.render());
    if coverage {
        println!("coverage:");
        print!("{}", coverage_ledger());
    }
    Ok(result.passed())
}

fn sweep(name: &str, config: Option<&Path>, out: Option<&Path>) -> anyhow::Result<()> {
    let experiment = Experiment::select(name)?;
    let cfg = load_config(config)?;
    let output = harness::sweep(experiment, &cfg)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(format!("{name}.csv"));
    let dat = dir.join(format!("{name}.dat"));
    fs::write(&csv, &output.csv).with_context(|| format!("writing {}", csv.display()))?;
    fs::write(&dat, &output.dat).with_context(|| format!("writing {}", dat.display()))?;
    let r = &output.report;
    println!(
        "{name}: slope {:.4} over {} points, limit {:.6e}{:+.6e}i, target {:.6e}{:+.6e}i",
        r.fitted_slope,
        r.fit_points(),
        r.extrapolated_limit.re,
        r.extrapolated_limit.im,
        r.target.re,
        r.target.im
    );
    println!("wrote {} and {}", csv.display(), dat.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Verify {
            suite,
            config,
            seed,
            coverage,
        } => verify(&suite, config.as_deref(), seed, coverage),
        Command::Sweep {
            experiment,
            config,
            out,
        } => sweep(&experiment, config.as_deref(), out.as_deref()).map(|_| true),
        Command::List => {
            print!("{}", harness::list());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(status(&e))
        }
    }
}
