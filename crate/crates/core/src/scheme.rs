//! Implicit upwind finite-volume step.
//!
//! For every admissible cell `i`
//!
//! ```text
//! (P_i - P_i^prev) / tau + sum_k (F_{i+e_k/2} - F_{i-e_k/2}) / h_k = 0
//! F = m_w(P_i, P_{i+e}) v_+ + m_w(P_{i+e}, P_i) v_-,   v = -(xi_{i+e} - xi_i) / h_k
//! xi_i = U'(P_i) + V_i + |Q| sum_j K_ij P_j^mid
//! ```
//!
//! with `F = 0` on faces that are not shared by two admissible cells.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Dual, Real};
use crate::grid::Grid;
use crate::linalg::{solve_tridiagonal, BandMatrix, LinalgError};
use crate::model::{sample_potentials, Model, ModelError, SampledPotentials};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("cell {cell}: {source}")]
    Entropy {
        cell: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state has {got} values, grid has {expected} cells")]
    Shape { expected: usize, got: usize },
    #[error("non-finite density at cell {0}")]
    NonFinite(usize),
    #[error("invalid scheme options: {0}")]
    Options(String),
    #[error("step {step}: Newton did not converge in {iterations} iterations (residual {residual:e})")]
    Newton { step: usize, iterations: usize, residual: f64 },
    #[error("step {step}: no admissible Newton increment after {halvings} halvings")]
    Admissibility { step: usize, halvings: usize },
    #[error("step {step}: Picard iteration did not converge in {iterations} iterations (residual {residual:e})")]
    Picard { step: usize, iterations: usize, residual: f64 },
    #[error("step {step}: linear solve failed: {source}")]
    Linear {
        step: usize,
        #[source]
        source: LinalgError,
    },
}

impl SchemeError {
    /// Residual sup-norm carried by convergence failures.
    pub fn residual(&self) -> Option<f64> {
        match self {
            SchemeError::Newton { residual, .. } | SchemeError::Picard { residual, .. } => Some(*residual),
            _ => None,
        }
    }
}

/// Time level of the density inside the interaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Midpoint {
    /// implicit, `P^{n+1}`; energy-stable for positive semi-definite `K`
    O1,
    /// explicit, `P^n`; energy-stable for negative semi-definite `K`
    O2,
    /// average of both; energy-stable for any symmetric `K`
    O3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeOptions {
    pub midpoint: Midpoint,
    /// Sup-norm tolerance on the residual of an accepted step.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub picard_max_iters: usize,
    /// Halvings of a Newton increment allowed to keep iterates inside the
    /// domain of a singular `U'`.
    pub max_halvings: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            midpoint: Midpoint::O3,
            newton_tol: 1e-10,
            newton_max_iters: 50,
            picard_max_iters: 200,
            max_halvings: 30,
        }
    }
}

impl SchemeOptions {
    pub fn validate(&self) -> Result<(), SchemeError> {
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(SchemeError::Options(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.newton_max_iters == 0 || self.picard_max_iters == 0 {
            return Err(SchemeError::Options("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Densities on the admissible cells at time level `time_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub values: Vec<f64>,
    pub time_index: usize,
    pub tau: f64,
}

impl StateField {
    pub fn new(values: Vec<f64>, time_index: usize, tau: f64) -> Result<Self, SchemeError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SchemeError::NonFinite(i));
        }
        Ok(StateField { values, time_index, tau })
    }

    pub fn time(&self) -> f64 {
        self.time_index as f64 * self.tau
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Velocities, fluxes and upwind weights on the interior faces, in the
/// order of [`Grid::faces`].
#[derive(Debug, Clone, PartialEq)]
pub struct FaceData {
    pub velocity: Vec<f64>,
    pub flux: Vec<f64>,
    pub theta: Vec<f64>,
}

/// How the interaction term enters `xi`.
#[derive(Debug, Clone, Copy)]
pub enum Nonlocal<'a> {
    /// `|Q| K P^mid` from the arguments, according to the midpoint option.
    Implicit,
    /// A precomputed `|Q| K P^mid`, held fixed.
    Frozen(&'a [f64]),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Newton corrections, summed over Picard sweeps.
    pub newton_iterations: usize,
    /// Picard sweeps; 0 when the interaction term needs none.
    pub picard_iterations: usize,
    /// Sup-norm of the full residual at the accepted state.
    pub residual_norm: f64,
    pub wall_time: f64,
}

/// One discretization: grid, model samples and time step.
#[derive(Debug, Clone)]
pub struct Scheme {
    grid: Grid,
    model: Model,
    sampled: SampledPotentials,
    tau: f64,
    options: SchemeOptions,
    color_groups: Vec<Vec<usize>>,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

impl Scheme {
    pub fn new(grid: Grid, model: Model, tau: f64, options: SchemeOptions) -> Result<Self, SchemeError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SchemeError::Options(format!("time step must be positive, got {tau}")));
        }
        options.validate()?;
        let sampled = sample_potentials(&model.potentials, grid.cells())?;
        let colors = grid.distance2_coloring();
        let ncolors = colors.iter().max().map_or(0, |c| c + 1);
        let mut color_groups = vec![Vec::new(); ncolors];
        for (pos, &c) in colors.iter().enumerate() {
            color_groups[c].push(pos);
        }
        Ok(Scheme { grid, model, sampled, tau, options, color_groups })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn potentials(&self) -> &SampledPotentials {
        &self.sampled
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn options(&self) -> &SchemeOptions {
        &self.options
    }

    fn check_shape(&self, n: usize) -> Result<(), SchemeError> {
        if n != self.grid.len() {
            return Err(SchemeError::Shape { expected: self.grid.len(), got: n });
        }
        Ok(())
    }

    /// `|Q| K P^mid` for real-valued arguments, `None` when `K = 0`.
    pub fn interaction(&self, p_next: &[f64], p_prev: &[f64]) -> Option<Vec<f64>> {
        let k = self.sampled.k.as_ref()?;
        let mid = self.midpoint_values(p_next, p_prev);
        let q = self.grid.cell_volume();
        Some((k * nalgebra::DVector::from_vec(mid)).iter().map(|v| q * v).collect())
    }

    fn midpoint_values<S: Real>(&self, p_next: &[S], p_prev: &[f64]) -> Vec<S> {
        match self.options.midpoint {
            Midpoint::O1 => p_next.to_vec(),
            Midpoint::O2 => p_prev.iter().map(|&v| S::cst(v)).collect(),
            Midpoint::O3 => p_next.iter().zip(p_prev).map(|(&a, &b)| (a + b) * 0.5).collect(),
        }
    }

    /// `xi_i = U'(P_i) + V_i + |Q| sum_j K_ij P_j^mid`.
    pub fn assemble_xi<S: Real>(&self, p_next: &[S], p_prev: &[f64], nonlocal: Nonlocal<'_>) -> Result<Vec<S>, SchemeError> {
        self.check_shape(p_next.len())?;
        self.check_shape(p_prev.len())?;
        let mut xi = Vec::with_capacity(p_next.len());
        for (cell, (&p, &v)) in p_next.iter().zip(&self.sampled.v).enumerate() {
            let du = self.model.entropy.du(p).map_err(|source| SchemeError::Entropy { cell, source })?;
            xi.push(du + v);
        }
        match nonlocal {
            Nonlocal::Frozen(conv) => {
                self.check_shape(conv.len())?;
                for (x, &c) in xi.iter_mut().zip(conv) {
                    *x += S::cst(c);
                }
            }
            Nonlocal::Implicit => {
                if let Some(k) = &self.sampled.k {
                    let mid = self.midpoint_values(p_next, p_prev);
                    let q = self.grid.cell_volume();
                    for (i, x) in xi.iter_mut().enumerate() {
                        let mut acc = S::zero();
                        for (j, &m) in mid.iter().enumerate() {
                            acc += m * k[(i, j)];
                        }
                        *x += acc * q;
                    }
                }
            }
        }
        Ok(xi)
    }

    /// `v = -(xi_upper - xi_lower) / h_k` on every interior face.
    pub fn face_velocity<S: Real>(&self, xi: &[S]) -> Vec<S> {
        let h = self.grid.spacing();
        self.grid
            .faces()
            .iter()
            .map(|f| -(xi[f.upper] - xi[f.lower]) / h[f.axis])
            .collect()
    }

    fn upwind_flux<S: Real>(&self, lower: S, upper: S, v: S) -> S {
        let mob = &self.model.mobility;
        let vp = v.pos_part();
        let vm = v.neg_part();
        let mut f = S::zero();
        if vp.value() != 0.0 {
            f += mob.upwind(lower, upper) * vp;
        }
        if vm.value() != 0.0 {
            f += mob.upwind(upper, lower) * vm;
        }
        f
    }

    /// Fluxes and weights `theta = m_w(P_i, P_{i+e}) s_+(v) + m_w(P_{i+e}, P_i) s_-(v)`
    /// with strict sign indicators, so `F = theta v` and `theta = F = 0` when `v = 0`.
    pub fn face_flux(&self, p: &[f64], velocity: &[f64]) -> FaceData {
        let mob = &self.model.mobility;
        let mut flux = Vec::with_capacity(velocity.len());
        let mut theta = Vec::with_capacity(velocity.len());
        for (f, &v) in self.grid.faces().iter().zip(velocity) {
            let (a, b) = (p[f.lower], p[f.upper]);
            let t = if v > 0.0 {
                mob.upwind(a, b)
            } else if v < 0.0 {
                mob.upwind(b, a)
            } else {
                0.0
            };
            theta.push(t);
            flux.push(t * v);
        }
        FaceData { velocity: velocity.to_vec(), flux, theta }
    }

    /// Faces of the solution `p_next` reached from `p_prev`.
    pub fn face_data(&self, p_next: &[f64], p_prev: &[f64]) -> Result<FaceData, SchemeError> {
        let xi = self.assemble_xi(p_next, p_prev, Nonlocal::Implicit)?;
        let v = self.face_velocity(&xi);
        Ok(self.face_flux(p_next, &v))
    }

    /// `G_i = (P_i - P_i^prev) / tau + sum_k (F_{i+e_k/2} - F_{i-e_k/2}) / h_k`.
    pub fn residual<S: Real>(&self, p_next: &[S], p_prev: &[f64], nonlocal: Nonlocal<'_>) -> Result<Vec<S>, SchemeError> {
        let xi = self.assemble_xi(p_next, p_prev, nonlocal)?;
        let v = self.face_velocity(&xi);
        let h = self.grid.spacing();
        let inv_tau = 1.0 / self.tau;
        let mut g: Vec<S> = p_next.iter().zip(p_prev).map(|(&a, &b)| (a - b) * inv_tau).collect();
        for (f, &vf) in self.grid.faces().iter().zip(&v) {
            let flux = self.upwind_flux(p_next[f.lower], p_next[f.upper], vf) / h[f.axis];
            g[f.lower] += flux;
            g[f.upper] -= flux;
        }
        Ok(g)
    }

    /// Residual with the interaction term at its prescribed time level.
    pub fn full_residual(&self, p_next: &[f64], p_prev: &[f64]) -> Result<Vec<f64>, SchemeError> {
        self.residual(p_next, p_prev, Nonlocal::Implicit)
    }

    /// Residual and its banded Jacobian at `p`, by compressed dual seeding
    /// over a distance-2 coloring. With `conv` given the interaction term is
    /// frozen at those values; without it `K` must be zero for the band to be
    /// exact.
    pub fn linearize(&self, p: &[f64], p_prev: &[f64], conv: Option<&[f64]>) -> Result<(Vec<f64>, BandMatrix), SchemeError> {
        let nonlocal = conv.map_or(Nonlocal::Implicit, Nonlocal::Frozen);
        let n = p.len();
        let bw = self.grid.bandwidth();
        let mut jac = BandMatrix::zeros(n, bw, bw);
        let mut seeded: Vec<Dual> = p.iter().map(|&v| Dual::constant(v)).collect();
        let mut values = None;
        for group in &self.color_groups {
            for &j in group {
                seeded[j].der = 1.0;
            }
            let out = self.residual(&seeded, p_prev, nonlocal)?;
            for &j in group {
                seeded[j].der = 0.0;
                jac.set(j, j, out[j].der);
                for &r in self.grid.neighbors(j) {
                    jac.set(r, j, out[r].der);
                }
            }
            if values.is_none() {
                values = Some(out.iter().map(|g| g.val).collect());
            }
        }
        let values = match values {
            Some(v) => v,
            None => self.residual(p, p_prev, nonlocal)?,
        };
        Ok((values, jac))
    }

    fn solve_linear(&self, jac: BandMatrix, rhs: &[f64], step: usize) -> Result<Vec<f64>, SchemeError> {
        let n = jac.n();
        if self.grid.bandwidth() == 1 {
            let diag: Vec<f64> = (0..n).map(|i| jac.get(i, i)).collect();
            let lower: Vec<f64> = (1..n).map(|i| jac.get(i, i - 1)).collect();
            let upper: Vec<f64> = (1..n).map(|i| jac.get(i - 1, i)).collect();
            if let Ok(x) = solve_tridiagonal(&lower, &diag, &upper, rhs) {
                return Ok(x);
            }
            log::debug!("tridiagonal solve hit a small pivot, retrying with pivoting");
        }
        jac.factor()
            .and_then(|lu| lu.solve(rhs))
            .map_err(|source| SchemeError::Linear { step, source })
    }

    fn admissible(&self, p: &[f64]) -> bool {
        let e = &self.model.entropy;
        let alpha = self.model.mobility.upper_bound();
        p.iter().all(|&v| {
            v.is_finite() && (!e.singular_at_zero() || v > 0.0) && (!e.singular_at_alpha() || v < alpha)
        })
    }

    /// Newton on the local system; returns the iterate and the corrections
    /// spent. At least one correction is always applied.
    fn newton(
        &self,
        guess: &[f64],
        p_prev: &[f64],
        conv: Option<&[f64]>,
        tol: f64,
        step: usize,
    ) -> Result<(Vec<f64>, usize, f64), SchemeError> {
        let mut p = guess.to_vec();
        let mut iterations = 0;
        loop {
            let (g, jac) = self.linearize(&p, p_prev, conv)?;
            let norm = sup_norm(&g);
            if !norm.is_finite() {
                return Err(SchemeError::Newton { step, iterations, residual: norm });
            }
            if iterations >= 1 && norm <= tol {
                return Ok((p, iterations, norm));
            }
            if iterations >= self.options.newton_max_iters {
                return Err(SchemeError::Newton { step, iterations, residual: norm });
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let delta = self.solve_linear(jac, &rhs, step)?;
            let mut scale = 1.0;
            let mut halvings = 0;
            loop {
                let candidate: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + scale * d).collect();
                if self.admissible(&candidate) {
                    p = candidate;
                    break;
                }
                if halvings == self.options.max_halvings {
                    return Err(SchemeError::Admissibility { step, halvings });
                }
                halvings += 1;
                scale *= 0.5;
            }
            iterations += 1;
        }
    }

    /// Advance one time step from `prev`.
    pub fn step(&self, prev: &StateField) -> Result<(StateField, SolveReport), SchemeError> {
        let start = Instant::now();
        self.check_shape(prev.len())?;
        let step = prev.time_index + 1;
        let tol = self.options.newton_tol;
        let p_prev = &prev.values;
        let has_kernel = self.sampled.k.is_some();

        let (p, newton_iterations, picard_iterations, residual_norm) = if !has_kernel {
            let (p, it, norm) = self.newton(p_prev, p_prev, None, tol, step)?;
            (p, it, 0, norm)
        } else if self.options.midpoint == Midpoint::O2 {
            let conv = self.interaction(p_prev, p_prev).unwrap_or_default();
            let (p, it, norm) = self.newton(p_prev, p_prev, Some(&conv), tol, step)?;
            (p, it, 0, norm)
        } else {
            // lag the interaction term; accept once the full residual is small
            let mut p = p_prev.clone();
            let mut total = 0;
            let mut norm = f64::INFINITY;
            let mut sweeps = 0;
            let mut done = false;
            while sweeps < self.options.picard_max_iters {
                let conv = self.interaction(&p, p_prev).unwrap_or_default();
                let (next, it, _) = self.newton(&p, p_prev, Some(&conv), 0.5 * tol, step)?;
                total += it;
                sweeps += 1;
                p = next;
                norm = sup_norm(&self.full_residual(&p, p_prev)?);
                if norm <= tol {
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(SchemeError::Picard { step, iterations: sweeps, residual: norm });
            }
            (p, total, sweeps, norm)
        };

        let next = StateField::new(p, step, prev.tau)?;
        let report = SolveReport {
            newton_iterations,
            picard_iterations,
            residual_norm,
            wall_time: start.elapsed().as_secs_f64(),
        };
        Ok((next, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_index_set, DomainShape, MeshSpec};
    use crate::model::{Confinement, Entropy, Kernel, Mobility, Potentials};

    fn line(n: usize, h: f64) -> Grid {
        let mesh = MeshSpec::uniform(h, 1).unwrap();
        let domain = DomainShape::interval(0.5 * h, (n as f64 + 0.5) * h).unwrap();
        Grid::from_cells(build_index_set(&mesh, &domain).unwrap())
    }

    fn model(mobility: Mobility, entropy: Entropy, potentials: Potentials) -> Model {
        Model { mobility, entropy, potentials }
    }

    #[test]
    fn line_helper_has_expected_cells() {
        let g = line(3, 0.5);
        assert_eq!(g.len(), 3);
        assert_eq!(g.faces().len(), 2);
    }

    #[test]
    fn xi_of_quadratic_entropy() {
        let s = Scheme::new(line(2, 1.0), model(Mobility::linear(), Entropy::power(2.0).unwrap(), Potentials::none()), 1.0, SchemeOptions::default()).unwrap();
        let xi = s.assemble_xi(&[0.3, 0.7], &[0.0, 0.0], Nonlocal::Implicit).unwrap();
        assert!((xi[0] - 0.6).abs() < 1e-15 && (xi[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn xi_of_pure_confinement_ignores_density() {
        // V(x) = x at centers 1 and 2
        let pot = Potentials { confinement: Confinement::Linear { coefficient: 1.0 }, kernel: Kernel::Zero, hessian_bounds: None };
        let s = Scheme::new(line(2, 1.0), model(Mobility::linear(), Entropy::Zero, pot), 1.0, SchemeOptions::default()).unwrap();
        for p in [[0.1, 0.9], [5.0, -2.0]] {
            assert_eq!(s.assemble_xi(&p, &[0.0, 0.0], Nonlocal::Implicit).unwrap(), vec![1.0, 2.0]);
        }
    }

    #[test]
    fn xi_midpoint_average() {
        let kernel = Kernel::Custom(std::sync::Arc::new(|_: &[f64], _: &[f64]| -1.0));
        let pot = Potentials { confinement: Confinement::Zero, kernel, hessian_bounds: None };
        let s = Scheme::new(line(2, 0.5), model(Mobility::linear(), Entropy::Zero, pot), 1.0, SchemeOptions::default()).unwrap();
        let xi = s.assemble_xi(&[1.0, 1.0], &[0.0, 0.0], Nonlocal::Implicit).unwrap();
        assert_eq!(xi, vec![-0.5, -0.5]);
    }

    #[test]
    fn velocities() {
        let s = Scheme::new(line(2, 0.5), Model::porous_medium(2.0).unwrap(), 1.0, SchemeOptions::default()).unwrap();
        assert_eq!(s.face_velocity(&[0.0, 1.0]), vec![-2.0]);
        assert_eq!(s.face_velocity(&[3.0, 3.0]), vec![0.0]);
    }

    #[test]
    fn fluxes_and_weights() {
        let lin = Scheme::new(line(2, 1.0), Model::porous_medium(2.0).unwrap(), 1.0, SchemeOptions::default()).unwrap();
        let fd = lin.face_flux(&[0.3, 0.9], &[2.0]);
        assert!((fd.flux[0] - 0.6).abs() < 1e-15);
        let fd = lin.face_flux(&[0.3, 0.9], &[0.0]);
        assert_eq!((fd.flux[0], fd.theta[0]), (0.0, 0.0));

        let sat = Scheme::new(line(2, 1.0), model(Mobility::saturation(1.0).unwrap(), Entropy::Zero, Potentials::none()), 1.0, SchemeOptions::default()).unwrap();
        let fd = sat.face_flux(&[0.25, 0.75], &[-1.0]);
        assert!((fd.flux[0] + 0.25).abs() < 1e-15);
        assert_eq!(fd.flux[0], fd.theta[0] * fd.velocity[0]);
        assert!(fd.theta[0] >= 0.0);
    }

    #[test]
    fn two_cell_residual_by_hand() {
        let s = Scheme::new(line(2, 1.0), Model::porous_medium(2.0).unwrap(), 1.0, SchemeOptions::default()).unwrap();
        let g = s.residual(&[0.75, 0.25], &[1.0, 0.0], Nonlocal::Implicit).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn residual_vanishes_on_constant_state_and_telescopes() {
        let s = Scheme::new(line(5, 0.2), Model::porous_medium(2.0).unwrap(), 0.04, SchemeOptions::default()).unwrap();
        let g = s.residual(&[0.4; 5], &[0.4; 5], Nonlocal::Implicit).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        let next = [0.1, 0.5, 0.3, 0.9, 0.2];
        let prev = [0.3, 0.2, 0.6, 0.1, 0.4];
        let g = s.residual(&next, &prev, Nonlocal::Implicit).unwrap();
        let lhs: f64 = g.iter().sum();
        let rhs: f64 = next.iter().zip(&prev).map(|(a, b)| (a - b) / 0.04).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn singular_entropy_names_the_cell() {
        let s = Scheme::new(line(3, 1.0), model(Mobility::linear(), Entropy::Boltzmann, Potentials::none()), 1.0, SchemeOptions::default()).unwrap();
        let err = s.assemble_xi(&[0.5, 0.0, 0.5], &[0.5; 3], Nonlocal::Implicit).unwrap_err();
        assert!(matches!(err, SchemeError::Entropy { cell: 1, .. }));
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let s = Scheme::new(line(6, 0.25), Model::porous_medium(2.0).unwrap(), 0.0625, SchemeOptions::default()).unwrap();
        let prev = StateField::new(vec![0.7; 6], 0, 0.0625).unwrap();
        let (next, report) = s.step(&prev).unwrap();
        assert_eq!(next.values, prev.values);
        assert_eq!(report.newton_iterations, 1);
        assert_eq!(next.time_index, 1);
    }

    #[test]
    fn colored_jacobian_matches_dense_seeding() {
        let mesh = MeshSpec::uniform(0.5, 2).unwrap();
        let grid = Grid::new(&mesh, &DomainShape::ball(vec![0.0, 0.0], 1.6).unwrap()).unwrap();
        let n = grid.len();
        let pot = Potentials { confinement: Confinement::Quadratic { coefficient: 0.5 }, kernel: Kernel::Zero, hessian_bounds: None };
        let s = Scheme::new(grid, model(Mobility::saturation(1.0).unwrap(), Entropy::power(2.0).unwrap(), pot), 0.1, SchemeOptions::default()).unwrap();
        let p: Vec<f64> = (0..n).map(|i| 0.1 + 0.8 * ((i * 7 % 11) as f64 / 11.0)).collect();
        let prev: Vec<f64> = (0..n).map(|i| 0.2 + 0.5 * ((i * 3 % 5) as f64 / 5.0)).collect();
        let (_, band) = s.linearize(&p, &prev, None).unwrap();
        let dense = crate::autodiff::jacobian(|x: &[Dual]| s.residual(x, &prev, Nonlocal::Implicit), &p).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((band.get(i, j) - dense[(i, j)]).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn newton_step_conserves_mass_and_meets_tolerance() {
        let mesh = MeshSpec::uniform(0.25, 1).unwrap();
        let grid = Grid::new(&mesh, &DomainShape::interval(-2.0, 2.0).unwrap()).unwrap();
        let n = grid.len();
        let pot = Potentials { confinement: Confinement::Quadratic { coefficient: 2.0 }, kernel: Kernel::Zero, hessian_bounds: None };
        let s = Scheme::new(grid, model(Mobility::saturation(1.0).unwrap(), Entropy::power(2.0).unwrap(), pot), 0.0625, SchemeOptions::default()).unwrap();
        let mut state = StateField::new(vec![0.5; n], 0, 0.0625).unwrap();
        let m0: f64 = state.values.iter().sum();
        for _ in 0..10 {
            let (next, report) = s.step(&state).unwrap();
            assert!(report.residual_norm <= 1e-10);
            let g = s.full_residual(&next.values, &state.values).unwrap();
            assert!(sup_norm(&g) <= 1e-10);
            state = next;
        }
        let m: f64 = state.values.iter().sum();
        assert!((m - m0).abs() < 1e-12 * m0);
    }

    #[test]
    fn picard_handles_implicit_interaction() {
        let mesh = MeshSpec::uniform(0.25, 1).unwrap();
        let grid = Grid::new(&mesh, &DomainShape::interval(-2.0, 2.0).unwrap()).unwrap();
        let n = grid.len();
        let pot = Potentials { confinement: Confinement::Zero, kernel: Kernel::attractive_gaussian(), hessian_bounds: None };
        let opts = SchemeOptions { midpoint: Midpoint::O3, ..SchemeOptions::default() };
        let s = Scheme::new(grid, model(Mobility::saturation(1.0).unwrap(), Entropy::power(2.0).unwrap(), pot), 0.0625, opts).unwrap();
        let p0: Vec<f64> = (0..n).map(|i| 0.3 + 0.3 * (i as f64 * 0.7).sin().abs()).collect();
        let prev = StateField::new(p0, 0, 0.0625).unwrap();
        let (next, report) = s.step(&prev).unwrap();
        assert!(report.picard_iterations >= 1);
        assert!(sup_norm(&s.full_residual(&next.values, &prev.values).unwrap()) <= 1e-10);
    }
}
