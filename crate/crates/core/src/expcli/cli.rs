use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use super::config::ExperimentConfig;
use super::output::{write_outputs, RESULTS_CSV};
use super::run::run_cells;
use crate::error::Result;
use crate::optimizer::Scheme;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rsma,
    Sdma,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "rsma-jam",
    version,
    about = "RSMA vs SDMA sum-rate sweeps with pilot jamming",
    long_about = "Runs the precoder optimizer over an SNR x pilot-set grid and writes \
                  results.csv, per-curve plot data, per-cell details and, optionally, \
                  convergence traces. Exit codes: 0 success, 2 some cells infeasible \
                  or failed, 1 configuration or I/O error."
)]
struct Args {
    /// JSON experiment config; defaults to the built-in grid.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Experiment seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    strategy: Option<u8>,
    /// Reduced grid for CI: N = 8, M = 4, coarse tolerances.
    #[arg(long)]
    quick: bool,
    /// Write one JSON-lines convergence trace per cell.
    #[arg(long)]
    trace: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn effective_config(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(s) = args.scheme {
        cfg.schemes = match s {
            SchemeArg::Rsma => vec![Scheme::Rsma],
            SchemeArg::Sdma => vec![Scheme::Sdma],
            SchemeArg::Both => vec![Scheme::Rsma, Scheme::Sdma],
        };
    }
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if args.quick {
        cfg = cfg.quick();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<i32> {
    let cfg = effective_config(args)?;
    let cells = run_cells(&cfg, args.threads.map(|t| t as usize))?;
    let table = write_outputs(&cfg.out_dir, &cfg, &cells, args.trace)?;
    let failed: Vec<_> = cells
        .iter()
        .filter(|c| !c.row.status.has_result())
        .collect();
    for c in &failed {
        eprintln!(
            "cell snr={} scheme={} pilots={}: {} ({})",
            c.row.snr_db,
            c.row.scheme,
            c.row.pilot_count,
            c.row.status,
            c.error.as_deref().unwrap_or("")
        );
    }
    println!(
        "{} rows written to {}",
        table.rows.len(),
        cfg.out_dir.join(RESULTS_CSV).display()
    );
    Ok(if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

/// Entry point of the binary; `argv[0]` is the program name.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
