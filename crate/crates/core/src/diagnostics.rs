//! Free energy, dissipation, extrema envelopes, the `Lambda_U` entropy and the
//! discrete `H^1` / `W^{-1,1}` norms.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::grid::Grid;
use crate::linalg::{BandMatrix, LinalgError};
use crate::quadrature::integrate;
use crate::model::{Entropy, Factor, Model, ModelError, SampledPotentials};
use crate::scheme::{FaceData, Scheme, SchemeError, SolveReport, StateField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("cell {cell}: {source}")]
    Entropy {
        cell: usize,
        #[source]
        source: ModelError,
    },
    #[error("vector has {got} entries, grid has {expected} cells")]
    Shape { expected: usize, got: usize },
    #[error("exact W^-1,1 norm is only available in one dimension (got d = {0})")]
    Dimension(usize),
    #[error("discrete Poisson problem: {0}")]
    Linear(#[from] LinalgError),
    #[error("Lambda_U quadrature failed at s = {s}: {reason}")]
    Quadrature { s: f64, reason: String },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

fn check_len(grid: &Grid, n: usize) -> Result<(), DiagnosticsError> {
    if grid.len() != n {
        return Err(DiagnosticsError::Shape { expected: grid.len(), got: n });
    }
    Ok(())
}

/// `E_h = |Q| sum U(P_i) + |Q| sum V_i P_i + |Q|^2/2 sum P_i K_ij P_j`.
pub fn free_energy_parts(
    entropy: &Entropy,
    sampled: &SampledPotentials,
    cell_volume: f64,
    p: &[f64],
) -> Result<f64, DiagnosticsError> {
    let mut internal = 0.0;
    for (cell, &s) in p.iter().enumerate() {
        internal += entropy.u(s).map_err(|source| DiagnosticsError::Entropy { cell, source })?;
    }
    let potential: f64 = sampled.v.iter().zip(p).map(|(v, s)| v * s).sum();
    let interaction = match &sampled.k {
        Some(k) => {
            let pv = DVector::from_column_slice(p);
            0.5 * cell_volume * cell_volume * pv.dot(&(k * &pv))
        }
        None => 0.0,
    };
    Ok(cell_volume * (internal + potential) + interaction)
}

pub fn free_energy(scheme: &Scheme, p: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(scheme.grid(), p.len())?;
    free_energy_parts(&scheme.model().entropy, scheme.potentials(), scheme.grid().cell_volume(), p)
}

pub fn mass(grid: &Grid, p: &[f64]) -> f64 {
    grid.cell_volume() * p.iter().sum::<f64>()
}

/// Outcome of comparing the discrete dissipation with the energy drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationCheck {
    /// `tau |Q| sum_faces theta |v|^2`
    pub lhs: f64,
    /// `E_h(prev) - E_h(next)`
    pub drop: f64,
    pub ok: bool,
    /// Equality verdict, only when `U = 0` and the midpoint option is O3.
    pub equality: Option<bool>,
}

pub fn dissipation(faces: &FaceData, tau: f64, cell_volume: f64) -> f64 {
    let s: f64 = faces.theta.iter().zip(&faces.velocity).map(|(t, v)| t * v * v).sum();
    tau * cell_volume * s
}

pub fn dissipation_check(
    scheme: &Scheme,
    prev: &[f64],
    next: &[f64],
    faces: &FaceData,
    tol: f64,
) -> Result<DissipationCheck, DiagnosticsError> {
    let lhs = dissipation(faces, scheme.tau(), scheme.grid().cell_volume());
    let drop = free_energy(scheme, prev)? - free_energy(scheme, next)?;
    let equality = (scheme.model().entropy.is_zero() && scheme.options().midpoint == crate::scheme::Midpoint::O3)
        .then(|| (lhs - drop).abs() <= tol);
    Ok(DissipationCheck { lhs, drop, ok: lhs <= drop + tol, equality })
}

/// Constants of the extrema envelope: `lambda = ||D^2 V|| + ||D^2 K|| ||rho_0||_1`,
/// `lipschitz = ||m'||_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeParams {
    pub lambda: f64,
    pub lipschitz: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extremum {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{kind:?} envelope violated at step {step}: bound {bound}, value {value}")]
pub struct EnvelopeViolation {
    pub step: usize,
    pub kind: Extremum,
    pub bound: f64,
    pub value: f64,
}

impl EnvelopeParams {
    /// `(1 + 2 lambda tau d L)^{-n}`
    pub fn decay(&self, tau: f64, n: usize) -> f64 {
        (1.0 + 2.0 * self.lambda * tau * self.dim as f64 * self.lipschitz).powi(-(n as i32))
    }

    /// Lower bound for `min P^n` and upper bound for `max P^n`.
    pub fn bounds(&self, tau: f64, n: usize, min0: f64, max0: f64, alpha: Option<f64>) -> (f64, f64) {
        let f = self.decay(tau, n);
        let upper = alpha.map_or(f64::INFINITY, |a| a - f * (a - max0));
        (f * min0, upper)
    }
}

/// Check `min P^n >= c^n min P^0` and `alpha - max P^n >= c^n (alpha - max P^0)`
/// on a trajectory, `c = (1 + 2 lambda tau d L)^{-1}`.
pub fn extrema_envelope(
    history: &[Vec<f64>],
    tau: f64,
    alpha: Option<f64>,
    env: &EnvelopeParams,
    slack: f64,
) -> Result<(), EnvelopeViolation> {
    let Some(first) = history.first() else { return Ok(()) };
    let min0 = first.iter().copied().fold(f64::INFINITY, f64::min);
    let max0 = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (n, p) in history.iter().enumerate() {
        let (lo, hi) = env.bounds(tau, n, min0, max0, alpha);
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min < lo - slack {
            return Err(EnvelopeViolation { step: n, kind: Extremum::Min, bound: lo, value: min });
        }
        if max > hi + slack {
            return Err(EnvelopeViolation { step: n, kind: Extremum::Max, bound: hi, value: max });
        }
    }
    Ok(())
}

/// `[P]_{H^1_h} = ( |Q| sum_k sum_interior faces |(P_{i+e_k} - P_i) / h_k|^2 )^{1/2}`.
pub fn h1_seminorm(grid: &Grid, p: &[f64]) -> f64 {
    let h = grid.spacing();
    let s: f64 = grid
        .faces()
        .iter()
        .map(|f| {
            let d = (p[f.upper] - p[f.lower]) / h[f.axis];
            d * d
        })
        .sum();
    (grid.cell_volume() * s).sqrt()
}

/// Flux-norm of the field built from the discrete Poisson problem
/// `sum_k (2 U_i - U_{i+e_k} - U_{i-e_k}) / h_k^2 = P_i` with `U = 0` off the
/// index set and `F = -(U_{i+e_k} - U_i) / h_k` on every face. Always an upper
/// bound for the `W^{-1,1}_h` norm.
pub fn wm11_upper_bound(grid: &Grid, p: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(grid, p.len())?;
    let n = grid.len();
    if n == 0 {
        return Ok(0.0);
    }
    let h = grid.spacing();
    let cells = grid.cells();
    let bw = grid.bandwidth();
    let mut a = BandMatrix::zeros(n, bw, bw);
    let diag: f64 = h.iter().map(|hk| 2.0 / (hk * hk)).sum();
    for i in 0..n {
        a.set(i, i, diag);
    }
    for f in grid.faces() {
        let w = -1.0 / (h[f.axis] * h[f.axis]);
        a.set(f.lower, f.upper, w);
        a.set(f.upper, f.lower, w);
    }
    let u = a.factor()?.solve(p)?;
    let mut total = 0.0;
    for f in grid.faces() {
        total += (u[f.upper] - u[f.lower]).abs() / h[f.axis];
    }
    for i in 0..n {
        for (k, hk) in h.iter().enumerate() {
            for step in [-1, 1] {
                if cells.neighbor(i, k, step).is_none() {
                    total += u[i].abs() / hk;
                }
            }
        }
    }
    Ok(grid.cell_volume() * total)
}

/// Exact `W^{-1,1}_h` norm in one dimension. On each maximal run of
/// consecutive cells the admissible fluxes are `c + h S_j` with `S_j` the
/// partial sums of `P`, so the infimum is a median problem in `c`.
pub fn wm11_exact_1d(grid: &Grid, p: &[f64]) -> Result<f64, DiagnosticsError> {
    check_len(grid, p.len())?;
    if grid.dim() != 1 {
        return Err(DiagnosticsError::Dimension(grid.dim()));
    }
    let h = grid.spacing()[0];
    let cells = grid.cells();
    let mut total = 0.0;
    let mut start = 0;
    while start < p.len() {
        let mut end = start + 1;
        while end < p.len() && cells.index(end)[0] == cells.index(end - 1)[0] + 1 {
            end += 1;
        }
        let mut partial = Vec::with_capacity(end - start + 1);
        let mut s = 0.0;
        partial.push(0.0);
        for &v in &p[start..end] {
            s += h * v;
            partial.push(s);
        }
        let mut sorted = partial.clone();
        sorted.sort_by(f64::total_cmp);
        let c = -sorted[sorted.len() / 2];
        total += partial.iter().map(|s| (c + s).abs()).sum::<f64>();
        start = end;
    }
    Ok(grid.cell_volume() * total)
}

/// `Lambda_U` with `Lambda'' = U'' / m` and `Lambda(a) = Lambda'(a) = 0`,
/// `a = alpha / 2` (or `a = 1` for non-saturating mobility).
#[derive(Debug, Clone)]
pub struct LambdaEntropy {
    anchor: f64,
    form: LambdaForm,
}

#[derive(Debug, Clone)]
enum LambdaForm {
    Zero,
    /// `Lambda = G - G(a) - G'(a)(s - a)` for an explicit antiderivative pair.
    Closed { kind: ClosedKind },
    Quadrature { model: Box<Model> },
}

#[derive(Debug, Clone, Copy)]
enum ClosedKind {
    // linear mobility, U = s^m / (m - 1)
    LinearPower { m: f64 },
    // linear mobility, U = s ln s
    LinearBoltzmann,
    // m = s (alpha - s), U = s^2
    SaturationQuadratic { alpha: f64 },
}

fn xlogx(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s.ln()
    }
}

impl ClosedKind {
    fn g(self, s: f64) -> (f64, f64) {
        match self {
            ClosedKind::LinearPower { m: 2.0 } => (2.0 * (xlogx(s) - s), 2.0 * s.ln()),
            ClosedKind::LinearPower { m } => {
                let c = m / ((m - 2.0) * (m - 1.0));
                (c * s.powf(m - 1.0), c * (m - 1.0) * s.powf(m - 2.0))
            }
            ClosedKind::LinearBoltzmann => (-s.ln(), -1.0 / s),
            ClosedKind::SaturationQuadratic { alpha } => {
                let c = 2.0 / alpha;
                (c * (xlogx(s) + xlogx(alpha - s)), c * (s.ln() - (alpha - s).ln()))
            }
        }
    }
}

impl LambdaEntropy {
    pub fn new(model: &Model) -> Self {
        let anchor = model.mobility.alpha().map_or(1.0, |a| 0.5 * a);
        let form = match (&model.entropy, model.mobility.up(), model.mobility.down()) {
            (Entropy::Zero, _, _) => LambdaForm::Zero,
            (Entropy::Power { exponent }, Factor::Identity, Factor::One) => {
                LambdaForm::Closed { kind: ClosedKind::LinearPower { m: *exponent } }
            }
            (Entropy::Boltzmann, Factor::Identity, Factor::One) => LambdaForm::Closed { kind: ClosedKind::LinearBoltzmann },
            (Entropy::Power { exponent }, Factor::SaturationUp { alpha }, Factor::SaturationDown { .. })
                if *exponent == 2.0 =>
            {
                LambdaForm::Closed { kind: ClosedKind::SaturationQuadratic { alpha: *alpha } }
            }
            _ => LambdaForm::Quadrature { model: Box::new(model.clone()) },
        };
        LambdaEntropy { anchor, form }
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn eval(&self, s: f64) -> Result<f64, DiagnosticsError> {
        let a = self.anchor;
        let v = match &self.form {
            LambdaForm::Zero => 0.0,
            LambdaForm::Closed { kind } => {
                let (ga, dga) = kind.g(a);
                let (gs, _) = kind.g(s);
                gs - ga - dga * (s - a)
            }
            LambdaForm::Quadrature { model } => {
                let f = |t: f64| (s - t) * model.entropy.ddu(t) / model.mobility.eval(t);
                integrate(&f, a, s, 1e-12, 40).ok_or_else(|| DiagnosticsError::Quadrature {
                    s,
                    reason: "integrand not finite or tolerance not met".into(),
                })?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DiagnosticsError::Quadrature { s, reason: format!("value {v}") })
        }
    }

    /// `|Q| sum_i Lambda_U(P_i)`
    pub fn total(&self, grid: &Grid, p: &[f64]) -> Result<f64, DiagnosticsError> {
        check_len(grid, p.len())?;
        let mut s = 0.0;
        for &v in p {
            s += self.eval(v)?;
        }
        Ok(grid.cell_volume() * s)
    }
}

/// One row of the per-step diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub free_energy: f64,
    pub dissipation_lhs: f64,
    pub energy_drop: f64,
    pub min_density: f64,
    pub max_density: f64,
    /// `[U'(P)]_{H^1_h}`; absent when `U'` is singular somewhere.
    pub h1_entropy_gradient: Option<f64>,
    pub lambda_entropy: Option<f64>,
    pub newton_iterations: usize,
    pub picard_iterations: usize,
    pub residual_norm: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 13] = [
        "step",
        "time",
        "mass",
        "free_energy",
        "dissipation_lhs",
        "energy_drop",
        "min_density",
        "max_density",
        "h1_entropy_gradient",
        "lambda_entropy",
        "newton_iterations",
        "picard_iterations",
        "residual_norm",
    ];

    /// Record for the initial state: no dissipation, no solve.
    pub fn initial(scheme: &Scheme, lambda: Option<&LambdaEntropy>, state: &StateField) -> Result<Self, DiagnosticsError> {
        let p = &state.values;
        Ok(DiagnosticsRecord {
            step: state.time_index,
            time: state.time(),
            mass: mass(scheme.grid(), p),
            free_energy: free_energy(scheme, p)?,
            dissipation_lhs: 0.0,
            energy_drop: 0.0,
            min_density: p.iter().copied().fold(f64::INFINITY, f64::min),
            max_density: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            h1_entropy_gradient: entropy_gradient(scheme, p),
            lambda_entropy: lambda.map(|l| l.total(scheme.grid(), p)).transpose()?,
            newton_iterations: 0,
            picard_iterations: 0,
            residual_norm: 0.0,
        })
    }

    /// Record for an accepted step `prev -> next`.
    pub fn after_step(
        scheme: &Scheme,
        lambda: Option<&LambdaEntropy>,
        prev: &StateField,
        prev_energy: f64,
        next: &StateField,
        report: &SolveReport,
    ) -> Result<Self, DiagnosticsError> {
        let mut rec = Self::initial(scheme, lambda, next)?;
        let faces = scheme.face_data(&next.values, &prev.values)?;
        rec.dissipation_lhs = dissipation(&faces, scheme.tau(), scheme.grid().cell_volume());
        rec.energy_drop = prev_energy - rec.free_energy;
        rec.newton_iterations = report.newton_iterations;
        rec.picard_iterations = report.picard_iterations;
        rec.residual_norm = report.residual_norm;
        Ok(rec)
    }
}

fn entropy_gradient(scheme: &Scheme, p: &[f64]) -> Option<f64> {
    let e = &scheme.model().entropy;
    let du: Result<Vec<f64>, _> = p.iter().map(|&s| e.du(s)).collect();
    du.ok().map(|d| h1_seminorm(scheme.grid(), &d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_index_set, DomainShape, MeshSpec};
    use crate::model::{Confinement, Kernel, Mobility, Potentials};
    use crate::scheme::SchemeOptions;
    use std::sync::Arc;

    fn line(n: usize, h: f64) -> Grid {
        let mesh = MeshSpec::uniform(h, 1).unwrap();
        let domain = DomainShape::interval(0.5 * h, (n as f64 + 0.5) * h).unwrap();
        Grid::from_cells(build_index_set(&mesh, &domain).unwrap())
    }

    fn scheme(grid: Grid, entropy: Entropy, kernel: Kernel) -> Scheme {
        let model = Model {
            mobility: Mobility::linear(),
            entropy,
            potentials: Potentials { confinement: Confinement::Zero, kernel, hessian_bounds: None },
        };
        Scheme::new(grid, model, 1.0, SchemeOptions::default()).unwrap()
    }

    #[test]
    fn free_energy_examples() {
        let s = scheme(line(2, 1.0), Entropy::Zero, Kernel::Zero);
        assert_eq!(free_energy(&s, &[0.3, 0.4]).unwrap(), 0.0);
        let s = scheme(line(2, 0.5), Entropy::power(2.0).unwrap(), Kernel::Zero);
        assert!((free_energy(&s, &[1.0, 2.0]).unwrap() - 2.5).abs() < 1e-15);
        let one = Kernel::Custom(Arc::new(|_: &[f64], _: &[f64]| 1.0));
        let s = scheme(line(2, 1.0), Entropy::Zero, one);
        assert!((free_energy(&s, &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_step_has_no_dissipation() {
        let s = scheme(line(3, 1.0), Entropy::power(2.0).unwrap(), Kernel::Zero);
        let p = [0.5; 3];
        let faces = s.face_data(&p, &p).unwrap();
        let check = dissipation_check(&s, &p, &p, &faces, 1e-12).unwrap();
        assert_eq!((check.lhs, check.drop, check.ok), (0.0, 0.0, true));
    }

    #[test]
    fn flat_envelope_without_forcing() {
        let env = EnvelopeParams { lambda: 0.0, lipschitz: 1.0, dim: 1 };
        let history = vec![vec![0.2, 0.5], vec![0.3, 0.4], vec![0.35, 0.35]];
        assert!(extrema_envelope(&history, 0.1, Some(1.0), &env, 1e-8).is_ok());
        let bad = vec![vec![0.2, 0.5], vec![0.1, 0.6]];
        let err = extrema_envelope(&bad, 0.1, Some(1.0), &env, 1e-8).unwrap_err();
        assert_eq!((err.step, err.kind), (1, Extremum::Min));
    }

    #[test]
    fn envelope_decay_factor() {
        let env = EnvelopeParams { lambda: 4.0, lipschitz: 1.0, dim: 1 };
        // 1 + 2 * 4 * 0.125 * 1 * 1 = 2
        assert!((env.decay(0.125, 3) - 0.125).abs() < 1e-15);
        let (lo, hi) = env.bounds(0.125, 1, 0.4, 0.6, Some(1.0));
        assert!((lo - 0.2).abs() < 1e-15 && (hi - 0.8).abs() < 1e-15);
    }

    #[test]
    fn h1_examples() {
        let g = line(2, 0.5);
        assert_eq!(h1_seminorm(&g, &[0.3, 0.3]), 0.0);
        assert!((h1_seminorm(&g, &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-12);

        // 2x2 block with h = 1: P = a_i + b_j is separable
        let mesh = MeshSpec::uniform(1.0, 2).unwrap();
        let g2 = Grid::new(&mesh, &DomainShape::cube(-0.5, 1.5, 2).unwrap()).unwrap();
        assert_eq!(g2.len(), 4);
        let (a, b) = ([0.0, 2.0], [0.0, 3.0]);
        let p: Vec<f64> = (0..4).map(|pos| {
            let idx = g2.cells().index(pos);
            a[idx[0] as usize] + b[idx[1] as usize]
        }).collect();
        // axis 0: two faces with jump 2, axis 1: two faces with jump 3
        let expected = (2.0 * 4.0 + 2.0 * 9.0f64).sqrt();
        assert!((h1_seminorm(&g2, &p) - expected).abs() < 1e-12);
    }

    #[test]
    fn wm11_single_cell() {
        let g = line(1, 0.5);
        assert!((wm11_exact_1d(&g, &[1.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(wm11_upper_bound(&g, &[1.0]).unwrap() >= 0.25 - 1e-15);
        assert_eq!(wm11_exact_1d(&g, &[0.0]).unwrap(), 0.0);
        assert_eq!(wm11_upper_bound(&g, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn wm11_rejects_two_dimensions() {
        let mesh = MeshSpec::uniform(1.0, 2).unwrap();
        let g2 = Grid::new(&mesh, &DomainShape::cube(-0.5, 1.5, 2).unwrap()).unwrap();
        assert!(matches!(wm11_exact_1d(&g2, &[1.0; 4]), Err(DiagnosticsError::Dimension(2))));
        assert!(wm11_upper_bound(&g2, &[1.0; 4]).unwrap() > 0.0);
    }

    #[test]
    fn wm11_exact_handles_separate_runs() {
        // cells at 1, 2 and 4, 5: two independent runs
        let mesh = MeshSpec::uniform(1.0, 1).unwrap();
        let domain = DomainShape::custom("gap", vec![0.0], vec![6.0], |x: &[f64]| (x[0] - 3.0).abs() > 0.6).unwrap();
        let g = Grid::new(&mesh, &domain).unwrap();
        assert_eq!(g.len(), 4);
        let v = wm11_exact_1d(&g, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        // each run: fluxes c, c + 1, c with c = 0 -> 1
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_closed_forms() {
        let pme = Model::porous_medium(2.0).unwrap();
        let l = LambdaEntropy::new(&pme);
        assert_eq!(l.anchor(), 1.0);
        assert!(l.eval(1.0).unwrap().abs() < 1e-15);
        // 2 (s ln s - s) - (-2) - 0 at s = 2
        let expected = 2.0 * (2.0 * 2f64.ln() - 2.0) + 2.0;
        assert!((l.eval(2.0).unwrap() - expected).abs() < 1e-14);
        assert!((l.eval(0.0).unwrap() - 2.0).abs() < 1e-15);

        let sat = Model::saturation_drift_diffusion(1.0, 2.0, Confinement::Zero).unwrap();
        let l = LambdaEntropy::new(&sat);
        assert!(l.eval(0.5).unwrap().abs() < 1e-15);
        assert!(l.eval(0.1).unwrap() > 0.0 && l.eval(0.9).unwrap() > 0.0);
    }

    #[test]
    fn lambda_quadrature_agrees_with_closed_form() {
        let sat = Model::saturation_drift_diffusion(1.0, 2.0, Confinement::Zero).unwrap();
        let closed = LambdaEntropy::new(&sat);
        let quad = LambdaEntropy { anchor: 0.5, form: LambdaForm::Quadrature { model: Box::new(sat) } };
        for s in [0.0, 0.05, 0.3, 0.5, 0.77, 1.0] {
            assert!((closed.eval(s).unwrap() - quad.eval(s).unwrap()).abs() < 1e-8, "s = {s}");
        }
        let pme3 = Model::porous_medium(3.0).unwrap();
        let closed = LambdaEntropy::new(&pme3);
        let quad = LambdaEntropy { anchor: 1.0, form: LambdaForm::Quadrature { model: Box::new(pme3) } };
        for s in [0.0, 0.4, 1.0, 2.5] {
            assert!((closed.eval(s).unwrap() - quad.eval(s).unwrap()).abs() < 1e-8, "s = {s}");
        }
    }
}
