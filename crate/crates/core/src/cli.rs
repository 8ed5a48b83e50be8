//! Command-line front end: `run`, `convergence`, `norms` and `presets`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::config::{parse_config, preset, preset_names, ConfigError, ExperimentSpec};
use crate::diagnostics::{h1_seminorm, mass, wm11_exact_1d, wm11_upper_bound};
use crate::grid::{Grid, MeshSpec};
use crate::harness::{run_convergence, simulate, HarnessError, RunOptions};
use crate::output::{level_summary, write_convergence, write_manifest, write_trajectory, OutputError};

#[derive(Debug, Parser)]
#[command(name = "aggdiff", version, about = "Finite-volume solver for aggregation-diffusion equations with saturating mobility")]
pub struct Cli {
    /// JSON experiment config (may name a `preset` and override its keys).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in preset to use when no config file is given.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    pub preset: Option<String>,
    /// Output directory; defaults to the config's `output_dir` or `out/<name>`.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write diagnostics, snapshots and a manifest.
    Run {
        /// Spacing to run at; the finest listed one by default.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Run every level of the spacing chain and write errors and rates.
    Convergence,
    /// Print mass, H^1 seminorm and W^{-1,1} norms of a field CSV as JSON.
    Norms {
        /// Field in snapshot layout (`i_1.., x_1.., density`).
        field: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing --config or --preset")]
    NoConfig,
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("field file: {0}")]
    Field(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::NoConfig => 2,
            CliError::Read { .. } => 2,
            CliError::Harness(HarnessError::Config(_) | HarnessError::Grid(_)) => 2,
            _ => 1,
        }
    }
}

fn load_spec(cli: &Cli) -> Result<ExperimentSpec, CliError> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            Ok(parse_config(&text)?)
        }
        (None, Some(name)) => preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()).into()),
        (None, None) => Err(CliError::NoConfig),
    }
}

fn output_dir(cli: &Cli, spec: &ExperimentSpec) -> PathBuf {
    cli.output
        .clone()
        .or_else(|| spec.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&spec.name))
}

fn cmd_run(cli: &Cli, h: Option<f64>) -> Result<(), CliError> {
    let spec = load_spec(cli)?;
    let h = h.unwrap_or(*spec.h.last().expect("validated"));
    if !(h > 0.0 && h.is_finite()) {
        return Err(ConfigError::Invalid(format!("--h must be positive, got {h}")).into());
    }
    let start = Instant::now();
    let t = simulate(&spec, h, RunOptions { keep_history: false, keep_snapshots: true })?;
    let dir = output_dir(cli, &spec);
    let files = write_trajectory(&dir, &t)?;
    write_manifest(&dir, &spec, vec![level_summary(&t)], start.elapsed().as_secs_f64())?;
    if !cli.quiet {
        let last = t.records.last().expect("initial record");
        println!(
            "{}: h = {h}, tau = {}, {} steps, {} cells; mass {:.12e}, energy {:.6e}",
            spec.name,
            t.tau,
            t.steps,
            t.grid.len(),
            last.mass,
            last.free_energy
        );
        println!("wrote {} files to {}", files.len() + 1, dir.display());
    }
    Ok(())
}

fn cmd_convergence(cli: &Cli) -> Result<(), CliError> {
    let spec = load_spec(cli)?;
    let start = Instant::now();
    let study = run_convergence(&spec, false)?;
    let dir = output_dir(cli, &spec);
    fs::create_dir_all(&dir).map_err(|source| OutputError::Io { path: dir.clone(), source })?;
    write_convergence(&dir.join("convergence.csv"), &study.rows)?;
    for t in &study.trajectories {
        write_trajectory(&dir.join(format!("h_{}", t.h)), t)?;
    }
    let levels = study.trajectories.iter().map(level_summary).collect();
    write_manifest(&dir, &spec, levels, start.elapsed().as_secs_f64())?;
    if !cli.quiet {
        println!("{:>10} {:>12} {:>12} {:>12} {:>7}", "h", "tau", "eps1", "eps2", "rate");
        let cell = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4e}"));
        for r in &study.rows {
            println!(
                "{:>10} {:>12} {:>12} {:>12} {:>7}",
                r.h,
                format!("{:.4e}", r.tau),
                cell(r.eps1),
                cell(r.eps2),
                r.rate.map_or("-".to_string(), |v| format!("{v:.3}"))
            );
        }
        println!("wrote {}", dir.join("convergence.csv").display());
    }
    Ok(())
}

/// Values of a snapshot-layout CSV placed on `grid` by their index columns.
pub fn read_field(text: &str, grid: &Grid) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Field(m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').map(str::trim).collect();
    let d = grid.dim();
    let index_cols: Vec<usize> = (1..=d)
        .map(|k| header.iter().position(|c| *c == format!("i_{k}")).ok_or_else(|| bad(format!("missing column i_{k}"))))
        .collect::<Result<_, _>>()?;
    if header.iter().any(|c| *c == format!("i_{}", d + 1)) {
        return Err(bad(format!("field has more than {d} index columns")));
    }
    let density = header.iter().position(|c| *c == "density").ok_or_else(|| bad("missing column density".into()))?;
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0;
    for (line_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let row = line_no + 2;
        let get = |c: usize| fields.get(c).copied().ok_or_else(|| bad(format!("row {row} is short")));
        let idx: Vec<i64> = index_cols
            .iter()
            .map(|&c| get(c)?.parse::<i64>().map_err(|e| bad(format!("row {row}: {e}"))))
            .collect::<Result<_, _>>()?;
        let pos = grid.cells().position(&idx).ok_or_else(|| bad(format!("row {row}: cell {idx:?} is not on the grid")))?;
        let v: f64 = get(density)?.parse().map_err(|e| bad(format!("row {row}: {e}")))?;
        if !values[pos].is_nan() {
            return Err(bad(format!("row {row}: cell {idx:?} repeated")));
        }
        values[pos] = v;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(bad(format!("{seen} rows for a grid of {} cells", grid.len())));
    }
    Ok(values)
}

fn cmd_norms(cli: &Cli, field: &Path) -> Result<(), CliError> {
    let spec = load_spec(cli)?;
    let domain = spec.domain.build()?;
    let h = spec.h[0];
    let grid = Grid::new(&MeshSpec::uniform(h, domain.dim()).map_err(HarnessError::from)?, &domain).map_err(HarnessError::from)?;
    let text = fs::read_to_string(field).map_err(|source| CliError::Read { path: field.to_path_buf(), source })?;
    let p = read_field(&text, &grid)?;
    let bound = wm11_upper_bound(&grid, &p).map_err(HarnessError::from)?;
    let mut out = json!({
        "cells": grid.len(),
        "h": h,
        "mass": mass(&grid, &p),
        "h1_seminorm": h1_seminorm(&grid, &p),
        "wm11_upper_bound": bound,
    });
    if grid.dim() == 1 {
        out["wm11_exact"] = json!(wm11_exact_1d(&grid, &p).map_err(HarnessError::from)?);
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("plain values"));
    Ok(())
}

fn cmd_presets() {
    for name in preset_names() {
        let spec = preset(name).expect("listed preset");
        println!("{name:<28} {}", spec.description);
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { h } => cmd_run(cli, *h),
        Command::Convergence => cmd_convergence(cli),
        Command::Norms { field } => cmd_norms(cli, field),
        Command::Presets => {
            cmd_presets();
            Ok(())
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
