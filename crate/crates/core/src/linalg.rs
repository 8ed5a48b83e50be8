//! Direct solvers for the stencil Jacobians: banded LU with partial pivoting
//! and the Thomas algorithm for tridiagonal systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: matrix is {n}x{n}, right-hand side has {rhs}")]
    Dimension { n: usize, rhs: usize },
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `kl` extra columns on the right for the fill produced by row exchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.kl + self.ku {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu, LinalgError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tiny = f64::EPSILON * scale * n as f64;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in (k + 1)..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(LinalgError::Singular(k));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for r in (k + 1)..=last_row {
                let sr = self.slot(r, k);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l != 0.0 {
                    for j in (k + 1)..=last_col {
                        let u = self.data[self.slot(k, j)];
                        let s = self.slot(r, j);
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { m: self, pivots })
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        if rhs.len() != n {
            return Err(LinalgError::Dimension { n, rhs: rhs.len() });
        }
        let mut b = rhs.to_vec();
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for r in (k + 1)..=(k + kl).min(n - 1) {
                b[r] -= self.m.get(r, k) * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..=(i + kl + ku).min(n - 1) {
                s -= self.m.get(i, j) * b[j];
            }
            b[i] = s / self.m.get(i, i);
        }
        Ok(b)
    }
}

/// Thomas algorithm without pivoting. `lower[i]` couples row `i + 1` to
/// column `i`, `upper[i]` couples row `i` to column `i + 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(LinalgError::Dimension { n, rhs: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = diag.iter().chain(lower).chain(upper).fold(0.0f64, |a, v| a.max(v.abs()));
    let tiny = 1e3 * f64::EPSILON * scale;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if !(denom.abs() > tiny) {
        return Err(LinalgError::Singular(0));
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if !(denom.abs() > tiny) {
            return Err(LinalgError::Singular(i));
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn residual(a: &BandMatrix, x: &[f64], b: &[f64]) -> f64 {
        a.mul_vec(x).iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn requires_pivoting() {
        // zero on the first diagonal entry
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.set(2, 2, 3.0);
        let b = vec![1.0, 2.0, 3.0];
        let x = a.clone().factor().unwrap().solve(&b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(a.factor(), Err(LinalgError::Singular(0))));
    }

    #[test]
    fn thomas_on_laplacian() {
        let n = 6;
        let x = solve_tridiagonal(&vec![-1.0; n - 1], &vec![2.0; n], &vec![-1.0; n - 1], &vec![1.0; n]).unwrap();
        // exact: x_i = (i+1)(n-i)/2
        for (i, v) in x.iter().enumerate() {
            let e = ((i + 1) * (n - i)) as f64 / 2.0;
            assert!((v - e).abs() < 1e-12);
        }
        assert!(solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn band_lu_matches_dense(n in 2usize..12, kl in 0usize..4, ku in 0usize..4, seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut rand = move || {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state % 2001) as f64 / 1000.0 - 1.0
            };
            let mut a = BandMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if a.in_band(i, j) {
                        let v = rand() + if i == j { 0.1 } else { 0.0 };
                        a.set(i, j, v);
                        dense[(i, j)] = v;
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rand()).collect();
            let dense_ok = dense.clone().lu().solve(&DVector::from_vec(b.clone())).is_some();
            if let (true, Ok(lu)) = (dense_ok, a.clone().factor()) {
                let x = lu.solve(&b).unwrap();
                // backward error, as partial pivoting guarantees
                let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let bound = 1e-10 * (dense.amax() * xmax * n as f64 + 1.0);
                prop_assert!(residual(&a, &x, &b) <= bound);
            }
        }
    }
}
