//! Running experiments: time stepping with diagnostics, error estimators
//! against exact or half-spacing solutions, and convergence rates.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Estimator, ExperimentSpec};
use crate::diagnostics::{DiagnosticsError, DiagnosticsRecord, EnvelopeParams, EnvelopeViolation, Extremum, LambdaEntropy};
use crate::exact::{Barenblatt, ExactError};
use crate::grid::{Grid, GridError, MeshSpec};
use crate::model::{kernel_definiteness, Definiteness};
use crate::scheme::{Scheme, SchemeError, StateField};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("h = {h}: {source}")]
    Solver {
        h: f64,
        #[source]
        source: SchemeError,
    },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("levels are not nested: {0}")]
    Misaligned(String),
    #[error("rate estimate: {0}")]
    Rate(String),
}

/// What to keep from a run besides the diagnostics table.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every time level (needed for `eps2`).
    pub keep_history: bool,
    /// Keep snapshots at the configured cadence plus the final state.
    pub keep_snapshots: bool,
}

/// Result of one simulation at one spacing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    pub tau: f64,
    /// Steps actually taken.
    pub steps: usize,
    pub grid: Grid,
    /// Every time level when history was requested, else empty.
    pub history: Vec<Vec<f64>>,
    pub snapshots: Vec<StateField>,
    /// `records[n]` describes time level `n`.
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: StateField,
    /// `sup |P^{n+1} - P^n| / tau` over the last step.
    pub stationarity: f64,
    pub reached_stationarity: bool,
    /// Runs restarted with halved `tau`.
    pub retries: usize,
    pub eps1: Option<f64>,
    /// `None` when the envelope hypotheses are not declared.
    pub envelope: Option<Result<(), EnvelopeViolation>>,
    pub definiteness: Option<Definiteness>,
    pub wall_time: f64,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `tau h^d sum_n sum_i |P^n_i - rho(n tau, x_i)|` over the given time levels.
pub fn error_eps1(grid: &Grid, levels: &[Vec<f64>], tau: f64, exact: &dyn Fn(f64, &[f64]) -> f64) -> f64 {
    let cells = grid.cells();
    let centers: Vec<Vec<f64>> = (0..grid.len()).map(|p| cells.center(p)).collect();
    let mut total = 0.0;
    for (n, p) in levels.iter().enumerate() {
        let t = n as f64 * tau;
        total += p.iter().zip(&centers).map(|(v, x)| (v - exact(t, x)).abs()).sum::<f64>();
    }
    tau * grid.cell_volume() * total
}

/// `tau_h sum_n h^d sum_{i in I_h} |P_h^n(i) - P_{h/2}^{r n}(2 i)|` with
/// `r = tau_h / tau_{h/2}`, which must be an integer.
pub fn error_eps2(coarse: &Trajectory, fine: &Trajectory) -> Result<f64, HarnessError> {
    if coarse.history.is_empty() || fine.history.is_empty() {
        return Err(HarnessError::Misaligned("both runs must keep their history".into()));
    }
    let ratio = coarse.tau / fine.tau;
    let r = ratio.round();
    if r < 1.0 || (ratio - r).abs() > 1e-9 * ratio {
        return Err(HarnessError::Misaligned(format!("time steps {} and {} are not commensurate", coarse.tau, fine.tau)));
    }
    let r = r as usize;
    for (hc, hf) in coarse.grid.spacing().iter().zip(fine.grid.spacing()) {
        if (hc - 2.0 * hf).abs() > 1e-12 * hc {
            return Err(HarnessError::Misaligned(format!("spacing {hf} is not half of {hc}")));
        }
    }
    let fine_cells = fine.grid.cells();
    let mut map = Vec::with_capacity(coarse.grid.len());
    for idx in coarse.grid.cells().iter() {
        let doubled: Vec<i64> = idx.iter().map(|i| 2 * i).collect();
        let pos = fine_cells
            .position(&doubled)
            .ok_or_else(|| HarnessError::Misaligned(format!("coarse cell {idx:?} has no fine counterpart")))?;
        map.push(pos);
    }
    let levels = coarse.history.len();
    if (levels - 1) * r >= fine.history.len() {
        return Err(HarnessError::Misaligned(format!(
            "fine run has {} levels, coarse time grid needs {}",
            fine.history.len(),
            (levels - 1) * r + 1
        )));
    }
    let mut total = 0.0;
    for (n, pc) in coarse.history.iter().enumerate() {
        let pf = &fine.history[n * r];
        total += pc.iter().zip(&map).map(|(v, &j)| (v - pf[j]).abs()).sum::<f64>();
    }
    Ok(coarse.tau * coarse.grid.cell_volume() * total)
}

/// `log2(e_k / e_{k+1})` between consecutive levels.
pub fn rate_estimate(errors: &[f64]) -> Result<Vec<f64>, HarnessError> {
    if errors.len() < 2 {
        return Err(HarnessError::Rate(format!("need at least two errors, got {}", errors.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(HarnessError::Rate(format!("errors must be positive and finite, got {e}")));
    }
    Ok(errors
        .windows(2)
        .map(|w| {
            if w[0] == w[1] {
                log::warn!("error stagnates at {:e} between levels; rate set to 0", w[0]);
                0.0
            } else {
                (w[0] / w[1]).log2()
            }
        })
        .collect())
}

fn envelope_params(spec: &ExperimentSpec, scheme: &Scheme, dim: usize) -> Option<EnvelopeParams> {
    let env = spec.envelope?;
    let lipschitz = env.lipschitz.or(scheme.model().mobility.lipschitz())?;
    Some(EnvelopeParams { lambda: env.lambda, lipschitz, dim })
}

fn try_simulate(
    spec: &ExperimentSpec,
    h: f64,
    tau: f64,
    exact: Option<&Barenblatt>,
    run: RunOptions,
) -> Result<Trajectory, HarnessError> {
    let start = Instant::now();
    let domain = spec.domain.build()?;
    let dim = domain.dim();
    let grid = Grid::new(&MeshSpec::uniform(h, dim)?, &domain)?;
    let model = spec.model.build()?;
    let scheme = Scheme::new(grid, model, tau, spec.options.clone()).map_err(|source| HarnessError::Solver { h, source })?;
    let definiteness = scheme.potentials().k.as_ref().map(kernel_definiteness);
    let lambda = (spec.track_lambda && !scheme.model().entropy.is_zero()).then(|| LambdaEntropy::new(scheme.model()));
    let envelope = envelope_params(spec, &scheme, dim);
    let alpha = scheme.model().mobility.alpha();

    let steps = ((spec.final_time / tau) - 1e-9).ceil().max(1.0) as usize;
    let every = spec.snapshot_every.unwrap_or_else(|| steps.div_ceil(50)).max(1);

    let mut state = spec.initial_datum()?.sample(scheme.grid(), tau)?;
    let mut energy = crate::diagnostics::free_energy(&scheme, &state.values)?;
    let mut records = vec![DiagnosticsRecord::initial(&scheme, lambda.as_ref(), &state)?];
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    if run.keep_history {
        history.push(state.values.clone());
    }
    if run.keep_snapshots {
        snapshots.push(state.clone());
    }
    let centers: Vec<Vec<f64>> = (0..scheme.grid().len()).map(|p| scheme.grid().cells().center(p)).collect();
    let mut eps1_sum = exact.map(|b| {
        state.values.iter().zip(&centers).map(|(v, x)| (v - b.eval(0.0, x)).abs()).sum::<f64>()
    });
    let (min0, max0) = (records[0].min_density, records[0].max_density);
    let mut envelope_result = envelope.map(|_| Ok(()));
    let mut stationarity = f64::INFINITY;
    let mut reached = false;

    for n in 1..=steps {
        let (next, report) = scheme.step(&state).map_err(|source| HarnessError::Solver { h, source })?;
        let rec = DiagnosticsRecord::after_step(&scheme, lambda.as_ref(), &state, energy, &next, &report)?;
        stationarity = sup_diff(&next.values, &state.values) / tau;
        energy = rec.free_energy;
        if let (Some(env), Some(Ok(()))) = (&envelope, &envelope_result) {
            let (lo, hi) = env.bounds(tau, n, min0, max0, alpha);
            if rec.min_density < lo - 1e-8 {
                envelope_result = Some(Err(EnvelopeViolation { step: n, kind: Extremum::Min, bound: lo, value: rec.min_density }));
            } else if rec.max_density > hi + 1e-8 {
                envelope_result = Some(Err(EnvelopeViolation { step: n, kind: Extremum::Max, bound: hi, value: rec.max_density }));
            }
        }
        if let (Some(sum), Some(b)) = (eps1_sum.as_mut(), exact) {
            let t = n as f64 * tau;
            *sum += next.values.iter().zip(&centers).map(|(v, x)| (v - b.eval(t, x)).abs()).sum::<f64>();
        }
        records.push(rec);
        state = next;
        if run.keep_history {
            history.push(state.values.clone());
        }
        let done = spec.stationary_tol.is_some_and(|tol| stationarity < tol);
        if run.keep_snapshots && (n % every == 0 || n == steps || done) {
            snapshots.push(state.clone());
        }
        if done {
            reached = true;
            log::info!("{}: stationary after {n} steps (t = {})", spec.name, state.time());
            break;
        }
    }
    let steps_taken = state.time_index;
    Ok(Trajectory {
        h,
        tau,
        steps: steps_taken,
        grid: scheme.grid().clone(),
        history,
        snapshots,
        records,
        final_state: state,
        stationarity,
        reached_stationarity: reached,
        retries: 0,
        eps1: eps1_sum.map(|s| tau * scheme.grid().cell_volume() * s),
        envelope: envelope_result,
        definiteness,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Run one level. Solver failures restart the run with `tau` halved, up to
/// `spec.max_retries` times.
pub fn simulate(spec: &ExperimentSpec, h: f64, run: RunOptions) -> Result<Trajectory, HarnessError> {
    spec.validate()?;
    let exact = spec.exact_solution()?;
    let mut tau = spec.tau_for(h);
    let mut attempt = 0;
    loop {
        match try_simulate(spec, h, tau, exact.as_ref(), run) {
            Ok(mut t) => {
                t.retries = attempt;
                return Ok(t);
            }
            Err(HarnessError::Solver { source, .. }) if attempt < spec.max_retries && is_retryable(&source) => {
                log::warn!("{} at h = {h}: {source}; retrying with tau = {}", spec.name, 0.5 * tau);
                tau *= 0.5;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn is_retryable(e: &SchemeError) -> bool {
    matches!(
        e,
        SchemeError::Newton { .. } | SchemeError::Picard { .. } | SchemeError::Admissibility { .. } | SchemeError::Linear { .. }
    )
}

/// One row of the error/rate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub tau: f64,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    /// Rate between the previous level and this one.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub trajectories: Vec<Trajectory>,
}

/// Run every level of the chain (in parallel) and estimate errors and rates.
pub fn run_convergence(spec: &ExperimentSpec, keep_snapshots: bool) -> Result<ConvergenceStudy, HarnessError> {
    spec.validate()?;
    let run = RunOptions { keep_history: spec.estimator == Estimator::Eps2, keep_snapshots };
    let trajectories: Vec<Trajectory> = spec
        .h
        .par_iter()
        .map(|&h| simulate(spec, h, run))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ConvergenceRow> = trajectories
        .iter()
        .map(|t| ConvergenceRow { h: t.h, tau: t.tau, eps1: t.eps1, eps2: None, rate: None })
        .collect();
    if spec.estimator == Estimator::Eps2 {
        for k in 0..trajectories.len() - 1 {
            rows[k].eps2 = Some(error_eps2(&trajectories[k], &trajectories[k + 1])?);
        }
    }
    let errors: Vec<f64> = match spec.estimator {
        Estimator::Eps1 => rows.iter().filter_map(|r| r.eps1).collect(),
        Estimator::Eps2 => rows.iter().filter_map(|r| r.eps2).collect(),
        Estimator::None => Vec::new(),
    };
    if errors.len() >= 2 {
        for (k, rate) in rate_estimate(&errors)?.into_iter().enumerate() {
            rows[k + 1].rate = Some(rate);
        }
    }
    // keep memory bounded once the estimators are done
    let trajectories = trajectories
        .into_iter()
        .map(|mut t| {
            t.history = Vec::new();
            t
        })
        .collect();
    Ok(ConvergenceStudy { rows, trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::grid::{build_index_set, DomainShape};

    fn line_grid(h: f64, a: f64, b: f64) -> Grid {
        Grid::from_cells(build_index_set(&MeshSpec::uniform(h, 1).unwrap(), &DomainShape::interval(a, b).unwrap()).unwrap())
    }

    fn bare(grid: Grid, tau: f64, history: Vec<Vec<f64>>) -> Trajectory {
        let final_state = StateField::new(history.last().unwrap().clone(), history.len() - 1, tau).unwrap();
        Trajectory {
            h: grid.spacing()[0],
            tau,
            steps: history.len() - 1,
            grid,
            history,
            snapshots: Vec::new(),
            records: Vec::new(),
            final_state,
            stationarity: 0.0,
            reached_stationarity: false,
            retries: 0,
            eps1: None,
            envelope: None,
            definiteness: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn eps1_examples() {
        let g = line_grid(0.5, -0.25, 0.25);
        assert_eq!(g.len(), 1);
        // exact samples reproduce the run
        let levels = vec![vec![0.3], vec![0.7]];
        let exact = |t: f64, _: &[f64]| if t == 0.0 { 0.3 } else { 0.7 };
        assert_eq!(error_eps1(&g, &levels, 0.25, &exact), 0.0);
        let off = |t: f64, x: &[f64]| exact(t, x) + if t > 0.0 { 0.1 } else { 0.0 };
        assert!((error_eps1(&g, &levels, 0.25, &off) - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn eps2_examples() {
        let coarse = line_grid(0.5, -1.0, 1.0);
        let fine = line_grid(0.25, -1.0, 1.0);
        assert_eq!((coarse.len(), fine.len()), (3, 7));
        let c = bare(coarse.clone(), 0.25, vec![vec![0.4; 3]; 2]);
        let f = bare(fine.clone(), 0.0625, vec![vec![0.4; 7]; 5]);
        assert_eq!(error_eps2(&c, &f).unwrap(), 0.0);
        let mut hist = vec![vec![0.4; 7]; 5];
        hist[4][3] = 0.5; // center cell at the coarse level n = 1
        let f = bare(fine, 0.0625, hist);
        assert!((error_eps2(&c, &f).unwrap() - 0.25 * 0.5 * 0.1).abs() < 1e-15);
        let wrong = bare(line_grid(0.2, -1.0, 1.0), 0.0625, vec![vec![0.4; 9]; 5]);
        assert!(matches!(error_eps2(&c, &wrong), Err(HarnessError::Misaligned(_))));
    }

    #[test]
    fn rate_examples() {
        assert!((rate_estimate(&[0.2, 0.1]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((rate_estimate(&[0.9, 0.3]).unwrap()[0] - 3f64.log2()).abs() < 1e-15);
        assert_eq!(rate_estimate(&[1e-12, 1e-12]).unwrap(), vec![0.0]);
        assert!(rate_estimate(&[0.1, 0.0]).is_err());
        assert!(rate_estimate(&[0.1]).is_err());
    }

    #[test]
    fn barenblatt_short_run_tracks_exact_solution() {
        let mut spec = preset("barenblatt-1d").unwrap();
        spec.final_time = 0.16;
        let t = simulate(&spec, 0.2, RunOptions::default()).unwrap();
        assert_eq!(t.steps, 4);
        assert!(t.eps1.unwrap() < 0.05);
        let m0 = t.records[0].mass;
        assert!(t.records.iter().all(|r| (r.mass - m0).abs() <= 1e-10 * m0));
    }
}
