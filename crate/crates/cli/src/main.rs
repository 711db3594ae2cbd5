mod cache;
mod config;
mod error;
mod experiment;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdim_core::verify::{run_suite, Suite};

use crate::cache::{ResultRecord, CACHE_FILE};
use crate::error::CliError;

/// Overrides the default output directory of `run`.
const OUT_DIR_ENV: &str = "MDIM_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "mdim-out";

#[derive(Debug, Parser)]
#[command(name = "mdim", version, about = "Mean dimension, entropy dimension, Katok entropy, rate-distortion and pressure estimates for shift systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (default: $MDIM_OUT_DIR, then ./mdim-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recompute even when the cache holds this config.
        #[arg(long)]
        no_cache: bool,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a named check suite: paper-examples, inequalities, oracles or all.
    Verify {
        suite: String,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn set_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn print_summary(quantity: &str, upper: f64, lower: f64, cached: bool) {
    let tag = if cached { " (cached)" } else { "" };
    println!("{quantity} upper={upper:.6} lower={lower:.6}{tag}");
}

fn run(config: &Path, out: Option<PathBuf>, no_cache: bool, workers: Option<usize>) -> Result<bool, CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let cfg = config::parse(&text)?;
    set_workers(workers)?;
    let out = out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let cache_path = out.join(CACHE_FILE);
    let hash = cache::config_hash(&cfg.canonical_json());
    let hit = if no_cache { None } else { cache::lookup(&cache_path, &hash) };
    let (record, cached) = match hit {
        Some(r) => (r, true),
        None => {
            let o = experiment::run(&cfg)?;
            let record = ResultRecord {
                config_hash: hash,
                quantity: cfg.quantity.name(),
                payload: o.payload,
                csv: o.csv,
                upper: o.upper,
                lower: o.lower,
                check_failed: o.check_failed,
                created_unix: cache::now_unix(),
                library_version: env!("CARGO_PKG_VERSION").into(),
            };
            (record, false)
        }
    };
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let json = serde_json::to_string_pretty(&record.payload).expect("payload serializes");
    write(&out.join("result.json"), &format!("{json}\n"))?;
    write(&out.join("curve.csv"), &record.csv)?;
    if !cached {
        cache::append(&cache_path, &record)?;
    }
    print_summary(&record.quantity, record.upper, record.lower, cached);
    Ok(!record.check_failed)
}

fn verify(suite: &str, tolerance_scale: f64, workers: Option<usize>, json: Option<PathBuf>) -> Result<bool, CliError> {
    let suite: Suite = suite.parse()?;
    set_workers(workers)?;
    let report = run_suite(suite, tolerance_scale)?;
    println!("{report}");
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        write(&path, &format!("{text}\n"))?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            no_cache,
            workers,
        } => run(&config, out, no_cache, workers),
        Command::Verify {
            suite,
            tolerance_scale,
            workers,
            json,
        } => verify(&suite, tolerance_scale, workers, json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
