//! Problem data: mobility with its monotone splitting, entropy, confinement
//! potential and interaction kernel.
//!
//! Everything the implicit residual evaluates (`m_up`, `m_down`, `U'`) is
//! generic over [`Real`] so that it can be differentiated with dual numbers.
//! Potentials are only ever sampled at cell centers and stay `f64`.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::autodiff::Real;
use crate::grid::CellIndexSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("entropy derivative is singular at density {value}")]
    SingularEntropy { value: f64 },
    #[error("entropy is infinite at density {value}")]
    InfiniteEntropy { value: f64 },
    #[error("mobility decomposition failed: {0}")]
    Decomposition(String),
    #[error("kernel is not symmetric: |K(x_{i},x_{j}) - K(x_{j},x_{i})| = {gap:e}")]
    AsymmetricKernel { i: usize, j: usize, gap: f64 },
    #[error("invalid model parameter: {0}")]
    Parameter(String),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Piecewise-linear table on a uniform grid of `[0, alpha]`.
#[derive(Debug, Clone)]
pub struct MonotoneTable {
    step: f64,
    values: Vec<f64>,
}

impl MonotoneTable {
    fn eval<S: Real>(&self, s: S) -> S {
        let last = self.values.len() - 1;
        let x = s.value() / self.step;
        let k = (x.floor().max(0.0) as usize).min(last - 1);
        let slope = (self.values[k + 1] - self.values[k]) / self.step;
        // anchor at the nearer node so node values are reproduced exactly
        if x - k as f64 > 0.5 {
            (s - (k + 1) as f64 * self.step) * slope + self.values[k + 1]
        } else {
            (s - k as f64 * self.step) * slope + self.values[k]
        }
    }
}

/// One monotone factor of the mobility.
#[derive(Clone)]
pub enum Factor {
    /// `s`
    Identity,
    /// `1`
    One,
    /// `4 s (alpha - s) / alpha^2` below `alpha / 2`, then `1`.
    SaturationUp { alpha: f64 },
    /// `alpha^2 / 4` below `alpha / 2`, then `s (alpha - s)`.
    SaturationDown { alpha: f64 },
    Table(Arc<MonotoneTable>),
    Function { f: ScalarFn, df: ScalarFn },
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Identity => write!(f, "Identity"),
            Factor::One => write!(f, "One"),
            Factor::SaturationUp { alpha } => write!(f, "SaturationUp({alpha})"),
            Factor::SaturationDown { alpha } => write!(f, "SaturationDown({alpha})"),
            Factor::Table(t) => write!(f, "Table({} nodes)", t.values.len()),
            Factor::Function { .. } => write!(f, "Function"),
        }
    }
}

impl Factor {
    pub fn eval<S: Real>(&self, s: S) -> S {
        match self {
            Factor::Identity => s,
            Factor::One => S::cst(1.0),
            Factor::SaturationUp { alpha } => {
                if s.value() <= 0.5 * alpha {
                    s * (S::cst(*alpha) - s) * (4.0 / (alpha * alpha))
                } else {
                    S::cst(1.0)
                }
            }
            Factor::SaturationDown { alpha } => {
                if s.value() <= 0.5 * alpha {
                    S::cst(0.25 * alpha * alpha)
                } else {
                    s * (S::cst(*alpha) - s)
                }
            }
            Factor::Table(t) => t.eval(s),
            Factor::Function { f, df } => s.apply(f(s.value()), df(s.value())),
        }
    }
}

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// Mobility `m = m_up * m_down` with `m_up` non-decreasing, `m_down`
/// non-increasing, `m_up(0) = 0` and `m_down(alpha) = 0` when saturating.
#[derive(Debug, Clone)]
pub struct Mobility {
    alpha: Option<f64>,
    up: Factor,
    down: Factor,
    lipschitz: Option<f64>,
}

impl Mobility {
    pub fn new(alpha: Option<f64>, up: Factor, down: Factor, lipschitz: Option<f64>) -> Result<Self, ModelError> {
        if let Some(a) = alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(ModelError::Parameter(format!("saturation level must be positive, got {a}")));
            }
        }
        Ok(Mobility { alpha, up, down, lipschitz })
    }

    /// `m(s) = s`.
    pub fn linear() -> Self {
        Mobility { alpha: None, up: Factor::Identity, down: Factor::One, lipschitz: Some(1.0) }
    }

    /// `m(s) = s (alpha - s)` with its closed-form monotone factors.
    pub fn saturation(alpha: f64) -> Result<Self, ModelError> {
        Self::new(
            Some(alpha),
            Factor::SaturationUp { alpha },
            Factor::SaturationDown { alpha },
            Some(alpha),
        )
    }

    /// Saturation level, `None` when the mobility never vanishes from above.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn upper_bound(&self) -> f64 {
        self.alpha.unwrap_or(f64::INFINITY)
    }

    /// `||m'||_inf`, when known.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn up(&self) -> &Factor {
        &self.up
    }

    pub fn down(&self) -> &Factor {
        &self.down
    }

    fn clamp<S: Real>(&self, s: S) -> S {
        let hi = self.upper_bound();
        let v = s.value();
        if v < 0.0 || v > hi {
            if !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
                log::warn!("mobility argument {v} outside [0, {hi}] clamped (further clamps logged at debug)");
            } else {
                log::debug!("mobility argument {v} clamped");
            }
            s.clamp_to(0.0, hi)
        } else {
            s
        }
    }

    pub fn m_up<S: Real>(&self, s: S) -> S {
        self.up.eval(self.clamp(s))
    }

    pub fn m_down<S: Real>(&self, s: S) -> S {
        self.down.eval(self.clamp(s))
    }

    pub fn eval<S: Real>(&self, s: S) -> S {
        let s = self.clamp(s);
        self.up.eval(s) * self.down.eval(s)
    }

    /// Upwind mobility `m_w(a, b) = m_up(a) m_down(b)`: `a` is the upstream
    /// density, `b` the downstream one.
    pub fn upwind<S: Real>(&self, a: S, b: S) -> S {
        self.m_up(a) * self.m_down(b)
    }
}

/// Split a positive mobility on `(0, alpha)` vanishing at both ends into
/// monotone factors,
///
/// ```text
/// m_up(s)   = exp( int_{alpha/2}^s (m')_+ / m )
/// m_down(s) = m(alpha/2) exp( int_{alpha/2}^s (m')_- / m )
/// ```
///
/// tabulated on a uniform grid, 3-point Gauss quadrature per cell. With an infinite
/// `alpha` the mobility must already be non-decreasing and the split is
/// `(m, 1)`.
pub fn decompose_mobility<M, D>(m: M, dm: D, alpha: f64, quadrature_step: f64) -> Result<Mobility, ModelError>
where
    M: Fn(f64) -> f64 + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(quadrature_step > 0.0) {
        return Err(ModelError::Parameter("quadrature step must be positive".into()));
    }
    if alpha.is_infinite() && alpha > 0.0 {
        let probe = 1e3 * quadrature_step;
        for k in 0..=1000 {
            let s = probe * k as f64 / 1000.0;
            if dm(s) < 0.0 {
                return Err(ModelError::Decomposition(format!(
                    "unsaturated mobility must be non-decreasing, m'({s}) = {}",
                    dm(s)
                )));
            }
        }
        let m: ScalarFn = Arc::new(m);
        let dm: ScalarFn = Arc::new(dm);
        return Mobility::new(None, Factor::Function { f: m, df: dm }, Factor::One, None);
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ModelError::Parameter(format!("saturation level must be positive, got {alpha}")));
    }
    let n = ((alpha / quadrature_step).ceil() as usize).max(2);
    let n = n + n % 2; // alpha/2 must be a node
    let ds = alpha / n as f64;
    let half = n / 2;

    let quotient = |s: f64| -> Result<(f64, f64), ModelError> {
        let (mv, dv) = (m(s), dm(s));
        if !(mv > 0.0) || !mv.is_finite() || !dv.is_finite() {
            return Err(ModelError::Decomposition(format!(
                "non-integrable quotient m'/m at s = {s} (m = {mv}, m' = {dv}); refine the quadrature step or check m > 0 inside (0, alpha)"
            )));
        }
        Ok((dv.max(0.0) / mv, dv.min(0.0) / mv))
    };

    // three-point Gauss-Legendre on each cell; nodes stay off the endpoints
    let g = (0.6f64).sqrt() / 2.0;
    let cell = |k: usize| -> Result<(f64, f64), ModelError> {
        let c = (k as f64 + 0.5) * ds;
        let mut acc = (0.0, 0.0);
        for (x, w) in [(c - g * ds, 5.0 / 18.0), (c, 8.0 / 18.0), (c + g * ds, 5.0 / 18.0)] {
            let (p, q) = quotient(x)?;
            acc.0 += w * p * ds;
            acc.1 += w * q * ds;
        }
        Ok(acc)
    };

    // log-factors relative to alpha/2, accumulated outward
    let mut log_up = vec![0.0; n + 1];
    let mut log_down = vec![0.0; n + 1];
    for k in half..n {
        let (p, q) = cell(k)?;
        log_up[k + 1] = log_up[k] + p;
        log_down[k + 1] = log_down[k] + q;
    }
    for k in (0..half).rev() {
        let (p, q) = cell(k)?;
        log_up[k] = log_up[k + 1] - p;
        log_down[k] = log_down[k + 1] - q;
    }
    if dm(0.5 * ds) < 0.0 || dm(alpha - 0.5 * ds) > 0.0 {
        return Err(ModelError::Decomposition(
            "m' must be non-negative near 0 and non-positive near alpha".into(),
        ));
    }
    let mid = m(0.5 * alpha);
    let mut up: Vec<f64> = log_up.iter().map(|l| l.exp()).collect();
    let mut down: Vec<f64> = log_down.iter().map(|l| mid * l.exp()).collect();
    up[0] = 0.0;
    down[n] = 0.0;
    let lipschitz = (0..n)
        .map(|k| dm((k as f64 + 0.5) * ds).abs())
        .fold(0.0, f64::max);
    Mobility::new(
        Some(alpha),
        Factor::Table(Arc::new(MonotoneTable { step: ds, values: up })),
        Factor::Table(Arc::new(MonotoneTable { step: ds, values: down })),
        Some(lipschitz),
    )
}

/// Convex internal energy density `U`.
#[derive(Clone)]
pub enum Entropy {
    Zero,
    /// `U(s) = s^m / (m - 1)`, `m > 0`, `m != 1`; singular at 0 when `m < 1`.
    Power { exponent: f64 },
    /// `U(s) = s ln s`; singular at 0.
    Boltzmann,
    /// User supplied `U`, `U'`, `U''` with declared singular endpoints.
    Custom {
        u: ScalarFn,
        du: ScalarFn,
        ddu: ScalarFn,
        singular_at_zero: bool,
        singular_at_alpha: bool,
    },
}

impl fmt::Debug for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entropy::Zero => write!(f, "Zero"),
            Entropy::Power { exponent } => write!(f, "Power({exponent})"),
            Entropy::Boltzmann => write!(f, "Boltzmann"),
            Entropy::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Entropy {
    pub fn power(exponent: f64) -> Result<Self, ModelError> {
        if !(exponent > 0.0) || exponent == 1.0 {
            return Err(ModelError::Parameter(format!("entropy exponent must be positive and != 1, got {exponent}")));
        }
        Ok(Entropy::Power { exponent })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Entropy::Zero)
    }

    pub fn singular_at_zero(&self) -> bool {
        match self {
            Entropy::Power { exponent } => *exponent < 1.0,
            Entropy::Boltzmann => true,
            Entropy::Custom { singular_at_zero, .. } => *singular_at_zero,
            Entropy::Zero => false,
        }
    }

    pub fn singular_at_alpha(&self) -> bool {
        matches!(self, Entropy::Custom { singular_at_alpha: true, .. })
    }

    /// `U(s)`; the power law is extended evenly to `s < 0`.
    pub fn u(&self, s: f64) -> Result<f64, ModelError> {
        let v = match self {
            Entropy::Zero => 0.0,
            Entropy::Power { exponent: m } => {
                if *m < 1.0 && s <= 0.0 {
                    if s == 0.0 {
                        0.0
                    } else {
                        return Err(ModelError::InfiniteEntropy { value: s });
                    }
                } else {
                    s.abs().powf(*m) / (m - 1.0)
                }
            }
            Entropy::Boltzmann => {
                if s < 0.0 {
                    return Err(ModelError::InfiniteEntropy { value: s });
                } else if s == 0.0 {
                    0.0
                } else {
                    s * s.ln()
                }
            }
            Entropy::Custom { u, .. } => u(s),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::InfiniteEntropy { value: s })
        }
    }

    /// `U'(s)`, evaluable on dual numbers. Errors at singular endpoints.
    pub fn du<S: Real>(&self, s: S) -> Result<S, ModelError> {
        let v = s.value();
        let out = match self {
            Entropy::Zero => S::zero(),
            Entropy::Power { exponent: m } => {
                let c = m / (m - 1.0);
                if v > 0.0 {
                    s.powf(m - 1.0) * c
                } else if *m < 1.0 {
                    return Err(ModelError::SingularEntropy { value: v });
                } else if v == 0.0 {
                    // U''(0) is infinite for 1 < m < 2: use the secant slope over [0, 1e-8]
                    let slope = if *m >= 2.0 { m * 0f64.powf(m - 2.0) } else { c * 1e-8f64.powf(m - 2.0) };
                    s.apply(0.0, slope)
                } else {
                    -((-s).powf(m - 1.0) * c)
                }
            }
            Entropy::Boltzmann => {
                if v <= 0.0 {
                    return Err(ModelError::SingularEntropy { value: v });
                }
                s.ln() + 1.0
            }
            Entropy::Custom { du, ddu, singular_at_zero, .. } => {
                if *singular_at_zero && v <= 0.0 {
                    return Err(ModelError::SingularEntropy { value: v });
                }
                s.apply(du(v), ddu(v))
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(ModelError::SingularEntropy { value: v })
        }
    }

    pub fn ddu(&self, s: f64) -> f64 {
        match self {
            Entropy::Zero => 0.0,
            Entropy::Power { exponent: m } => m * s.abs().powf(m - 2.0),
            Entropy::Boltzmann => 1.0 / s,
            Entropy::Custom { ddu, .. } => ddu(s),
        }
    }
}

/// Confinement potential `V`.
#[derive(Clone)]
pub enum Confinement {
    Zero,
    /// `c |x|^2`
    Quadratic { coefficient: f64 },
    /// `c x_1`
    Linear { coefficient: f64 },
    /// `c (1 - |x|^2 / R^2)^2` inside `|x| < R`, zero outside. Vanishes with
    /// its gradient on `|x| = R`.
    Bump { amplitude: f64, radius: f64 },
    Custom(FieldFn),
}

impl fmt::Debug for Confinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Confinement::Zero => write!(f, "Zero"),
            Confinement::Quadratic { coefficient } => write!(f, "Quadratic({coefficient})"),
            Confinement::Linear { coefficient } => write!(f, "Linear({coefficient})"),
            Confinement::Bump { amplitude, radius } => write!(f, "Bump({amplitude}, {radius})"),
            Confinement::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Confinement {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2 = || x.iter().map(|v| v * v).sum::<f64>();
        match self {
            Confinement::Zero => 0.0,
            Confinement::Quadratic { coefficient } => coefficient * r2(),
            Confinement::Linear { coefficient } => coefficient * x[0],
            Confinement::Bump { amplitude, radius } => {
                let q = 1.0 - r2() / (radius * radius);
                if q > 0.0 {
                    amplitude * q * q
                } else {
                    0.0
                }
            }
            Confinement::Custom(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Confinement::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub width: f64,
}

/// Symmetric interaction kernel `K(x, y)`.
#[derive(Clone)]
pub enum Kernel {
    Zero,
    /// `sum_k a_k exp(-|x - y|^2 / (2 w_k^2))`
    Gaussians(Vec<GaussianTerm>),
    Custom(PairFn),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Zero => write!(f, "Zero"),
            Kernel::Gaussians(t) => write!(f, "Gaussians({t:?})"),
            Kernel::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Kernel {
    /// `-exp(-|x - y|^2 / 2)`, the attractive default.
    pub fn attractive_gaussian() -> Self {
        Kernel::Gaussians(vec![GaussianTerm { amplitude: -1.0, width: 1.0 }])
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Gaussians(terms) => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                terms.iter().map(|t| t.amplitude * (-r2 / (2.0 * t.width * t.width)).exp()).sum()
            }
            Kernel::Custom(f) => f(x, y),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Kernel::Zero)
    }
}

/// `V`, `K` and the optional `W^{2,inf}` bounds used for envelope checks.
#[derive(Debug, Clone)]
pub struct Potentials {
    pub confinement: Confinement,
    pub kernel: Kernel,
    /// `(||D^2 V||_inf, ||D_x^2 K||_inf)` when supplied.
    pub hessian_bounds: Option<(f64, f64)>,
}

impl Potentials {
    pub fn none() -> Self {
        Potentials { confinement: Confinement::Zero, kernel: Kernel::Zero, hessian_bounds: Some((0.0, 0.0)) }
    }
}

/// Cell-center samples `V_i = V(x_i)`, `K_ij = K(x_i, x_j)`. The kernel is
/// `None` when identically zero.
#[derive(Debug, Clone)]
pub struct SampledPotentials {
    pub v: Vec<f64>,
    pub k: Option<DMatrix<f64>>,
}

pub fn sample_potentials(pot: &Potentials, cells: &CellIndexSet) -> Result<SampledPotentials, ModelError> {
    let n = cells.len();
    let centers: Vec<Vec<f64>> = (0..n).map(|p| cells.center(p)).collect();
    let v = centers.iter().map(|x| pot.confinement.eval(x)).collect();
    if pot.kernel.is_zero() {
        return Ok(SampledPotentials { v, k: None });
    }
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = pot.kernel.eval(&centers[i], &centers[j]);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (k[(i, j)], k[(j, i)]);
            let gap = (a - b).abs();
            if gap > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(ModelError::AsymmetricKernel { i, j, gap });
            }
            let s = 0.5 * (a + b);
            k[(i, j)] = s;
            k[(j, i)] = s;
        }
    }
    Ok(SampledPotentials { v, k: Some(k) })
}

/// Sign structure of a sampled kernel matrix, used to pick the time level
/// of the interaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveSemidefinite,
    NegativeSemidefinite,
    Indefinite,
}

pub fn kernel_definiteness(k: &DMatrix<f64>) -> Definiteness {
    let eig = k.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * scale.max(1.0);
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min >= -tol {
        Definiteness::PositiveSemidefinite
    } else if max <= tol {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    }
}

/// A complete problem: mobility, entropy and potentials.
#[derive(Debug, Clone)]
pub struct Model {
    pub mobility: Mobility,
    pub entropy: Entropy,
    pub potentials: Potentials,
}

impl Model {
    /// Porous-medium equation `rho_t = Laplace(rho^m)`: linear mobility,
    /// `U = rho^m / (m - 1)`, no potentials.
    pub fn porous_medium(exponent: f64) -> Result<Self, ModelError> {
        Ok(Model {
            mobility: Mobility::linear(),
            entropy: Entropy::power(exponent)?,
            potentials: Potentials::none(),
        })
    }

    /// Drift-diffusion with saturation: `m = rho (alpha - rho)`,
    /// `U = rho^m / (m - 1)`, confinement `V`, no interaction.
    pub fn saturation_drift_diffusion(alpha: f64, exponent: f64, confinement: Confinement) -> Result<Self, ModelError> {
        Ok(Model {
            mobility: Mobility::saturation(alpha)?,
            entropy: Entropy::power(exponent)?,
            potentials: Potentials { confinement, kernel: Kernel::Zero, hessian_bounds: None },
        })
    }

    /// Saturation model with an interaction kernel.
    pub fn aggregation(alpha: f64, entropy: Entropy, confinement: Confinement, kernel: Kernel) -> Result<Self, ModelError> {
        Ok(Model {
            mobility: Mobility::saturation(alpha)?,
            entropy,
            potentials: Potentials { confinement, kernel, hessian_bounds: None },
        })
    }
}
