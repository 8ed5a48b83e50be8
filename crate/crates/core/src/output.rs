//! CSV tables and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::config::ExperimentSpec;
use crate::diagnostics::DiagnosticsRecord;
use crate::grid::Grid;
use crate::harness::{ConvergenceRow, Trajectory};
use crate::scheme::StateField;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_lines(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}").map_err(io_err(path))?;
    for row in rows {
        writeln!(w, "{row}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    [
        r.step.to_string(),
        num(r.time),
        num(r.mass),
        num(r.free_energy),
        num(r.dissipation_lhs),
        num(r.energy_drop),
        num(r.min_density),
        num(r.max_density),
        opt(r.h1_entropy_gradient),
        opt(r.lambda_entropy),
        r.newton_iterations.to_string(),
        r.picard_iterations.to_string(),
        num(r.residual_norm),
    ]
    .join(",")
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), OutputError> {
    write_lines(path, &DiagnosticsRecord::COLUMNS.join(","), records.iter().map(diagnostics_row))
}

/// Columns `i_1.., x_1.., density`, one row per cell.
pub fn write_snapshot(path: &Path, grid: &Grid, state: &StateField) -> Result<(), OutputError> {
    let d = grid.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("i_{k}")).collect();
    header.extend((1..=d).map(|k| format!("x_{k}")));
    header.push("density".into());
    let cells = grid.cells();
    let rows = (0..grid.len()).map(|p| {
        let mut row: Vec<String> = cells.index(p).iter().map(|i| i.to_string()).collect();
        row.extend(cells.center(p).into_iter().map(num));
        row.push(num(state.values[p]));
        row.join(",")
    });
    write_lines(path, &header.join(","), rows)
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<(), OutputError> {
    let lines = rows.iter().map(|r| [num(r.h), num(r.tau), opt(r.eps1), opt(r.eps2), opt(r.rate)].join(","));
    write_lines(path, "h,tau,eps1,eps2,rate", lines)
}

/// Writes `diagnostics.csv` and `snapshot_NNNNNN.csv` files into `dir`.
pub fn write_trajectory(dir: &Path, t: &Trajectory) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let diag = dir.join("diagnostics.csv");
    write_diagnostics(&diag, &t.records)?;
    written.push(diag);
    for s in &t.snapshots {
        let path = dir.join(format!("snapshot_{:06}.csv", s.time_index));
        write_snapshot(&path, &t.grid, s)?;
        written.push(path);
    }
    Ok(written)
}

/// Summary of one level for the manifest.
pub fn level_summary(t: &Trajectory) -> Value {
    json!({
        "h": t.h,
        "tau": t.tau,
        "cells": t.grid.len(),
        "steps": t.steps,
        "retries": t.retries,
        "final_time": t.final_state.time(),
        "stationarity": t.stationarity,
        "reached_stationarity": t.reached_stationarity,
        "eps1": t.eps1,
        "envelope": t.envelope.as_ref().map(|e| match e {
            Ok(()) => json!("ok"),
            Err(v) => json!({ "step": v.step, "kind": format!("{:?}", v.kind), "bound": v.bound, "value": v.value }),
        }),
        "kernel": t.definiteness.map(|d| format!("{d:?}")),
        "wall_time": t.wall_time,
    })
}

/// `manifest.json`: config echo, crate version, per-level summaries and
/// wall time. Keys come out sorted.
pub fn write_manifest(dir: &Path, spec: &ExperimentSpec, levels: Vec<Value>, wall_time: f64) -> Result<PathBuf, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = json!({
        "config": serde_json::to_value(spec)?,
        "version": env!("CARGO_PKG_VERSION"),
        "levels": levels,
        "wall_time": wall_time,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}
