use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::CellOutcome;
use super::table::{CellStatus, ResultTable};
use crate::error::{Error, Result};
use crate::metrics::{PrecoderSet, RateReport};
use crate::optimizer::Scheme;

pub const RESULTS_CSV: &str = "results.csv";
pub const DETAILS_JSON: &str = "details.json";
pub const CONFIG_JSON: &str = "config.json";
pub const PLOT_DIR: &str = "plotdata";
pub const TRACE_DIR: &str = "traces";

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn curve_file_name(scheme: Scheme, pilot_count: usize) -> String {
    format!("{scheme}_sp{pilot_count}.dat")
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    write(path, &table.to_csv()?)
}

/// One two-column `snr_db sum_rate` file per (scheme, pilot count).
/// Returns the written paths.
pub fn emit_plotdata(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::invalid("result table is empty"));
    }
    create_dir(dir)?;
    let strategy = table.rows[0].strategy;
    table
        .curves()
        .into_iter()
        .map(|((scheme, pilots), points)| {
            let mut text = format!(
                "# scheme={scheme} strategy={strategy} pilot_count={pilots}\n# snr_db sum_rate\n"
            );
            for (snr, rate) in points {
                text.push_str(&format!("{snr} {rate}\n"));
            }
            let path = dir.join(curve_file_name(scheme, pilots));
            write(&path, &text)?;
            Ok(path)
        })
        .collect()
}

#[derive(Serialize)]
struct CellDetail<'a> {
    snr_db: f64,
    scheme: Scheme,
    pilot_count: usize,
    status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a RateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precoders: Option<&'a PrecoderSet>,
}

fn trace_file_name(index: usize, cell: &CellOutcome) -> String {
    let r = &cell.row;
    format!(
        "cell{index:03}_{}_snr{}_sp{}.jsonl",
        r.scheme, r.snr_db, r.pilot_count
    )
}

/// Writes the CSV, plot data, per-cell details, the effective config and,
/// with `trace`, one JSON-lines convergence trace per cell.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    cells: &[CellOutcome],
    trace: bool,
) -> Result<ResultTable> {
    let table = ResultTable {
        users: cfg.users,
        rows: cells.iter().map(|c| c.row.clone()).collect(),
    };
    let csv = table.to_csv()?;
    create_dir(dir)?;
    write(&dir.join(RESULTS_CSV), &csv)?;
    emit_plotdata(&table, &dir.join(PLOT_DIR))?;
    let details: Vec<CellDetail> = cells
        .iter()
        .map(|c| CellDetail {
            snr_db: c.row.snr_db,
            scheme: c.row.scheme,
            pilot_count: c.row.pilot_count,
            status: c.row.status,
            error: c.error.as_deref(),
            report: c.solution.as_ref().map(|s| &s.report),
            precoders: c.solution.as_ref().map(|s| &s.precoders),
        })
        .collect();
    write(
        &dir.join(DETAILS_JSON),
        &serde_json::to_string_pretty(&details)?,
    )?;
    write(&dir.join(CONFIG_JSON), &serde_json::to_string_pretty(cfg)?)?;
    if trace {
        let tdir = dir.join(TRACE_DIR);
        create_dir(&tdir)?;
        for (i, c) in cells.iter().enumerate() {
            if let Some(sol) = &c.solution {
                write(&tdir.join(trace_file_name(i, c)), &sol.trace_jsonl()?)?;
            }
        }
    }
    Ok(table)
}
