//! Barenblatt profiles of the porous-medium equation and initial data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::quadrature::integrate;
use crate::scheme::{SchemeError, StateField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("Barenblatt exponent must exceed 1, got {0}")]
    Exponent(f64),
    #[error("invalid Barenblatt parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    State(#[from] SchemeError),
}

/// Parameters of the self-similar solution of `rho_t = Laplace(rho^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarenblattParams {
    pub exponent: f64,
    pub mass: f64,
    /// The profile at simulation time `t` is the self-similar one at `t + t0`.
    pub t0: f64,
    pub dim: usize,
}

/// `B(t, x) = t^{-beta d} (C - kappa |x|^2 t^{-2 beta})_+^{1/(m-1)}` with
/// `beta = 1 / (d (m - 1) + 2)`, `kappa = beta (m - 1) / (2 m)` and `C` fixed by
/// the mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    params: BarenblattParams,
    beta: f64,
    kappa: f64,
    c: f64,
}

/// `int_{|z| < 1} (1 - |z|^2)^q dz`
fn unit_ball_integral(q: f64, dim: usize) -> f64 {
    let d = dim as f64;
    // area of the unit sphere in R^d for the dimensions a grid can have
    let sphere = match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(0.5 * d) / gamma_half_integer(dim),
    };
    let radial = integrate(&|r: f64| (1.0 - r * r).powf(q) * r.powf(d - 1.0), 0.0, 1.0, 1e-14, 40)
        .expect("smooth integrand on [0, 1]");
    sphere * radial
}

// Gamma(d / 2) for integer d >= 1
fn gamma_half_integer(dim: usize) -> f64 {
    let mut g = if dim.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < 0.5 * dim as f64 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

impl Barenblatt {
    pub fn new(params: BarenblattParams) -> Result<Self, ExactError> {
        let BarenblattParams { exponent: m, mass, t0, dim } = params;
        if !(m > 1.0 && m.is_finite()) {
            return Err(ExactError::Exponent(m));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(ExactError::Parameter(format!("mass must be positive, got {mass}")));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(ExactError::Parameter(format!("t0 must be positive, got {t0}")));
        }
        if dim == 0 {
            return Err(ExactError::Parameter("dimension must be at least 1".into()));
        }
        let d = dim as f64;
        let q = 1.0 / (m - 1.0);
        let beta = 1.0 / (d * (m - 1.0) + 2.0);
        let kappa = beta * (m - 1.0) / (2.0 * m);
        // mass = C^{q + d/2} kappa^{-d/2} I_d(q), invariant in time
        let c = (mass * kappa.powf(0.5 * d) / unit_ball_integral(q, dim)).powf(1.0 / (q + 0.5 * d));
        Ok(Barenblatt { params, beta, kappa, c })
    }

    pub fn params(&self) -> &BarenblattParams {
        &self.params
    }

    /// The constant `C` fixed by the mass.
    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Radius of the support at simulation time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        (self.c / self.kappa).sqrt() * (t + self.params.t0).powf(self.beta)
    }

    /// Density at simulation time `t` (self-similar time `t + t0`).
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let s = t + self.params.t0;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let d = self.params.dim as f64;
        let inner = self.c - self.kappa * r2 * s.powf(-2.0 * self.beta);
        if inner <= 0.0 {
            0.0
        } else {
            s.powf(-self.beta * d) * inner.powf(1.0 / (self.params.exponent - 1.0))
        }
    }
}

/// Density at time 0, sampled at cell centers.
#[derive(Clone)]
pub enum InitialDatum {
    Constant(f64),
    Barenblatt(Barenblatt),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Constant(c) => write!(f, "Constant({c})"),
            InitialDatum::Barenblatt(b) => write!(f, "Barenblatt({:?})", b.params),
            InitialDatum::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl InitialDatum {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialDatum::Constant(c) => *c,
            InitialDatum::Barenblatt(b) => b.eval(0.0, x),
            InitialDatum::Custom(f) => f(x),
        }
    }

    pub fn sample(&self, grid: &Grid, tau: f64) -> Result<StateField, ExactError> {
        let cells = grid.cells();
        let values = (0..grid.len()).map(|p| self.eval(&cells.center(p))).collect();
        Ok(StateField::new(values, 0, tau)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainShape, MeshSpec};

    fn pme(dim: usize) -> Barenblatt {
        Barenblatt::new(BarenblattParams { exponent: 2.0, mass: 2.0, t0: 1.0, dim }).unwrap()
    }

    #[test]
    fn closed_form_constants() {
        assert!((pme(1).constant() - (3.0f64 / 16.0).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((pme(2).constant() - 0.5 / PI.sqrt()).abs() < 1e-12);
        assert!((gamma_half_integer(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = BarenblattParams { exponent: 1.0, mass: 2.0, t0: 1.0, dim: 1 };
        assert_eq!(Barenblatt::new(bad), Err(ExactError::Exponent(1.0)));
        let bad = BarenblattParams { exponent: 2.0, mass: 0.0, t0: 1.0, dim: 1 };
        assert!(Barenblatt::new(bad).is_err());
    }

    #[test]
    fn symmetric_profile() {
        let b = pme(2);
        for x in [[0.3, -1.2], [2.0, 0.1]] {
            let neg = [-x[0], -x[1]];
            assert_eq!(b.eval(0.5, &x), b.eval(0.5, &neg));
        }
    }

    #[test]
    fn mass_by_midpoint_rule() {
        for &m in &[2.0, 3.0] {
            let b = Barenblatt::new(BarenblattParams { exponent: m, mass: 2.0, t0: 1.0, dim: 1 }).unwrap();
            for t in [0.0, 0.64] {
                let h = 1e-4;
                let total: f64 = (0..120_000).map(|i| h * b.eval(t, &[-6.0 + (i as f64 + 0.5) * h])).sum();
                assert!((total - 2.0).abs() < 1e-6, "m = {m}, t = {t}: {total}");
            }
        }
        let b = pme(2);
        for t in [0.0, 1.28] {
            let h = 2e-3;
            let n = (7.0 / h) as usize;
            let mut total = 0.0;
            for i in 0..n {
                let x = -3.5 + (i as f64 + 0.5) * h;
                for j in 0..n {
                    total += b.eval(t, &[x, -3.5 + (j as f64 + 0.5) * h]);
                }
            }
            total *= h * h;
            assert!((total - 2.0).abs() < 1e-6, "t = {t}: {total}");
        }
    }

    #[test]
    fn satisfies_the_pde_inside_the_support() {
        for (dim, m) in [(1, 2.0), (1, 3.0), (2, 2.0)] {
            let b = Barenblatt::new(BarenblattParams { exponent: m, mass: 2.0, t0: 1.0, dim }).unwrap();
            let e = 1e-3;
            let r = 0.5 * b.support_radius(0.3);
            let x: Vec<f64> = (0..dim).map(|k| if k == 0 { r } else { 0.3 * r }).collect();
            let t = 0.3;
            let dt = (b.eval(t + e, &x) - b.eval(t - e, &x)) / (2.0 * e);
            let pm = |y: &[f64]| b.eval(t, y).powf(m);
            let mut lap = 0.0;
            for k in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += e;
                xm[k] -= e;
                lap += (pm(&xp) - 2.0 * pm(&x) + pm(&xm)) / (e * e);
            }
            assert!((dt - lap).abs() < 1e-4, "d = {dim}, m = {m}: {dt} vs {lap}");
        }
    }

    #[test]
    fn initial_data_sampling() {
        let mesh = MeshSpec::uniform(0.4, 1).unwrap();
        let grid = Grid::new(&mesh, &DomainShape::interval(-6.0, 6.0).unwrap()).unwrap();
        let s = InitialDatum::Constant(0.6).sample(&grid, 0.16).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.6));
        let b = pme(1);
        let s = InitialDatum::Barenblatt(b).sample(&grid, 0.16).unwrap();
        let center = grid.cells().position(&[0]).unwrap();
        assert_eq!(s.values[center], b.constant());
        let s = InitialDatum::Custom(Arc::new(|_: &[f64]| 0.0)).sample(&grid, 0.16).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        // first-order sampling of the mass
        let m: f64 = InitialDatum::Barenblatt(b).sample(&grid, 0.16).unwrap().values.iter().sum::<f64>() * 0.4;
        assert!((m - 2.0).abs() < 0.4);
    }
}
