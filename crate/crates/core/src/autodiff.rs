//! Forward-mode differentiation with single-direction dual numbers.
//!
//! Everything the residual touches is written against the [`Real`] trait so
//! the same code runs on `f64` (plain evaluation) and on [`Dual`] (one
//! directional derivative per evaluation). Jacobians are assembled column by
//! column from unit seeds.
//!
//! Non-smooth operations use a fixed subgradient convention: `pos_part` and
//! `neg_part` have derivative 0 at the origin, `abs` has derivative 0 at the
//! origin, and `max`/`min` return their second argument on ties, so
//! `x.max(0)` and `x.pos_part()` agree at the kink.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("division by a dual number with zero value")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogNonPositive(f64),
}

/// Scalar abstraction shared by `f64` and [`Dual`].
pub trait Real:
    Copy
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;
    fn max(self, other: Self) -> Self;
    fn min(self, other: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    /// `max(x, 0)`, derivative 0 at the origin.
    fn pos_part(self) -> Self {
        if self.value() > 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    /// `min(x, 0)`, derivative 0 at the origin.
    fn neg_part(self) -> Self {
        if self.value() < 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    /// Clamp into `[lo, hi]`; outside the interval the result is constant.
    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        let v = self.value();
        if v < lo {
            Self::cst(lo)
        } else if v > hi {
            Self::cst(hi)
        } else {
            self
        }
    }

    /// Lift a scalar function given its value `f` and slope `df` at
    /// `self.value()`.
    fn apply(self, f: f64, df: f64) -> Self;

    fn is_finite(self) -> bool;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
    #[inline]
    fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
    #[inline]
    fn apply(self, f: f64, _df: f64) -> Self {
        f
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Value plus one directional derivative.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub val: f64,
    pub der: f64,
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.val, self.der)
    }
}

impl Dual {
    pub const fn new(val: f64, der: f64) -> Self {
        Dual { val, der }
    }

    pub const fn constant(val: f64) -> Self {
        Dual { val, der: 0.0 }
    }

    /// The independent variable: derivative seed 1.
    pub const fn variable(val: f64) -> Self {
        Dual { val, der: 1.0 }
    }

    pub fn checked_div(self, rhs: Dual) -> Result<Dual, DualError> {
        if rhs.val == 0.0 {
            return Err(DualError::DivisionByZero);
        }
        Ok(self / rhs)
    }

    pub fn checked_ln(self) -> Result<Dual, DualError> {
        if self.val <= 0.0 {
            return Err(DualError::LogNonPositive(self.val));
        }
        Ok(Real::ln(self))
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.val + rhs.val, self.der + rhs.der)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.val - rhs.val, self.der - rhs.der)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.val * rhs.val, self.der * rhs.val + self.val * rhs.der)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.val;
        Dual::new(
            self.val * inv,
            (self.der * rhs.val - self.val * rhs.der) * inv * inv,
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.val, -self.der)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: f64) -> Dual {
        Dual::new(self.val + rhs, self.der)
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: f64) -> Dual {
        Dual::new(self.val - rhs, self.der)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: f64) -> Dual {
        Dual::new(self.val * rhs, self.der * rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: f64) -> Dual {
        Dual::new(self.val / rhs, self.der / rhs)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, rhs: Dual) {
        self.val += rhs.val;
        self.der += rhs.der;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, rhs: Dual) {
        self.val -= rhs.val;
        self.der -= rhs.der;
    }
}

impl Real for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.val
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, self.der * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.der / self.val)
    }
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Dual::constant(1.0);
        }
        if p == 1.0 {
            return self;
        }
        let v = self.val.powf(p);
        // zero direction: skip p x^(p-1), which is infinite at 0 for p < 1
        let dv = if self.der == 0.0 {
            0.0
        } else {
            p * self.val.powf(p - 1.0) * self.der
        };
        Dual::new(v, dv)
    }
    fn abs(self) -> Self {
        if self.val > 0.0 {
            self
        } else if self.val < 0.0 {
            -self
        } else {
            Dual::new(0.0, 0.0)
        }
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self.val > other.val {
            self
        } else {
            other
        }
    }
    #[inline]
    fn min(self, other: Self) -> Self {
        if self.val < other.val {
            self
        } else {
            other
        }
    }
    #[inline]
    fn apply(self, f: f64, df: f64) -> Self {
        Dual::new(f, if self.der == 0.0 { 0.0 } else { df * self.der })
    }
    fn is_finite(self) -> bool {
        self.val.is_finite() && self.der.is_finite()
    }
}

#[derive(Debug, Error)]
pub enum JacobianError<E: std::error::Error + 'static> {
    #[error("residual evaluation failed while seeding column {column}: {source}")]
    Residual {
        column: usize,
        #[source]
        source: E,
    },
    #[error("residual returned {got} entries for {expected} unknowns")]
    Shape { expected: usize, got: usize },
    #[error("non-finite derivative in column {column}, row {row}")]
    NonFinite { column: usize, row: usize },
}

/// Dense Jacobian of a square residual by column seeding: column `j` is the
/// derivative of `residual` along the unit direction `e_j` at `point`.
pub fn jacobian<F, E>(residual: F, point: &[f64]) -> Result<DMatrix<f64>, JacobianError<E>>
where
    F: Fn(&[Dual]) -> Result<Vec<Dual>, E>,
    E: std::error::Error + 'static,
{
    let n = point.len();
    let mut seeded: Vec<Dual> = point.iter().map(|&v| Dual::constant(v)).collect();
    let mut jac = DMatrix::zeros(n, n);
    for col in 0..n {
        seeded[col].der = 1.0;
        let out = residual(&seeded).map_err(|source| JacobianError::Residual { column: col, source })?;
        seeded[col].der = 0.0;
        if out.len() != n {
            return Err(JacobianError::Shape { expected: n, got: out.len() });
        }
        for (row, g) in out.iter().enumerate() {
            if !g.der.is_finite() {
                return Err(JacobianError::NonFinite { column: col, row });
            }
            jac[(row, col)] = g.der;
        }
    }
    Ok(jac)
}

/// Derivative of a scalar function at `x`.
pub fn derivative<F: Fn(Dual) -> Dual>(f: F, x: f64) -> f64 {
    f(Dual::variable(x)).der
}
