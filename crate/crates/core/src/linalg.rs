//! Band storage, banded LU with partial pivoting, norms and spectral radius
//! estimates used throughout the crate.
//!
//! Band storage keeps row `i` as the window of columns `i-kl ..= i+ku`.
//! Dense kernels (eigenvalues, SVD, small LU) are delegated to `nalgebra`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Vector / induced matrix norm selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormTag {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormTag {
    pub const ALL: [NormTag; 3] = [NormTag::One, NormTag::Two, NormTag::Inf];
}

impl fmt::Display for NormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormTag::One => "1",
            NormTag::Two => "2",
            NormTag::Inf => "inf",
        })
    }
}

impl FromStr for NormTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "one" => Ok(NormTag::One),
            "2" | "two" => Ok(NormTag::Two),
            "inf" | "Inf" | "infinity" => Ok(NormTag::Inf),
            other => Err(format!("unknown norm tag `{other}` (expected 1, 2 or inf)")),
        }
    }
}

pub fn vec_norm(v: &[f64], tag: NormTag) -> f64 {
    match tag {
        NormTag::One => v.iter().map(|x| x.abs()).sum(),
        NormTag::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormTag::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn diff_norm(a: &[f64], b: &[f64], tag: NormTag) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    vec_norm(&d, tag)
}

/// Anything that can be applied to a vector.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl LinearMap for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        Banded { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let mut b = Self::zeros(diag.len(), 0, 0);
        b.data.copy_from_slice(diag);
        b
    }

    /// Builds a band matrix with the tightest bandwidth holding every nonzero.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let (mut kl, mut ku) = (0, 0);
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    if j < i {
                        kl = kl.max(i - j);
                    } else {
                        ku = ku.max(j - i);
                    }
                }
            }
        }
        let mut b = Self::zeros(n, kl, ku);
        for i in 0..n {
            for j in b.cols(i) {
                b.set(i, j, a[(i, j)]);
            }
        }
        b
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    /// Column range of the stored band in row `i`.
    #[inline]
    pub fn cols(&self, i: usize) -> Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Banded { n: self.n, kl: self.kl, ku: self.ku, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Same entries stored with (at least) the requested bandwidths.
    pub fn widen(&self, kl: usize, ku: usize) -> Self {
        let mut out = Self::zeros(self.n, kl.max(self.kl), ku.max(self.ku));
        for i in 0..self.n {
            for j in self.cols(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for j in self.cols(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Row-wise absolute sums.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.cols(i).map(|j| self.get(i, j).abs()).sum()).collect()
    }

    pub fn abs_col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                s[j] += self.get(i, j).abs();
            }
        }
        s
    }

    pub fn norm(&self, tag: NormTag) -> f64 {
        match tag {
            NormTag::Inf => self.abs_row_sums().into_iter().fold(0.0, f64::max),
            NormTag::One => self.abs_col_sums().into_iter().fold(0.0, f64::max),
            NormTag::Two => two_norm(self),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl LinearMap for Banded {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w = self.width();
        for (i, o) in out.iter_mut().enumerate() {
            let cols = self.cols(i);
            let base = i * w + self.kl - i;
            let mut acc = 0.0;
            for j in cols {
                acc += self.data[base + j] * x[j];
            }
            *o = acc;
        }
    }
}

/// Entrywise maximum of equally sized band matrices; the result carries the
/// largest bandwidths among the inputs.
pub fn entrywise_max(mats: &[Banded]) -> Banded {
    let n = mats[0].n;
    let kl = mats.iter().map(|m| m.kl).max().unwrap_or(0);
    let ku = mats.iter().map(|m| m.ku).max().unwrap_or(0);
    let mut out = Banded::zeros(n, kl, ku);
    for i in 0..n {
        for j in out.cols(i) {
            let v = mats.iter().map(|m| m.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
            out.set(i, j, v);
        }
    }
    out
}

/// LU factorization of a band matrix with row partial pivoting.
///
/// Row interchanges can grow the upper bandwidth to `kl + ku`; the factor
/// keeps that fill inside its own band storage. Multipliers are stored per
/// elimination step and applied in order during the forward solve.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    uw: usize,
    u: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
    det_sign: f64,
}

impl BandedLu {
    /// Fails with the index of the first numerically zero pivot.
    pub fn factor(a: &Banded) -> Result<Self, usize> {
        let n = a.n;
        let kl = a.kl;
        let uw = a.kl + a.ku; // stored upper width after fill
        let w = kl + uw + 1;
        let scale = a.max_abs();
        let zero_tol = scale * f64::EPSILON * (n as f64);
        let mut u = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + j + kl - i;
        for i in 0..n {
            for j in a.cols(i) {
                u[idx(i, j)] = a.get(i, j);
            }
        }
        let mut mult = vec![0.0; n * kl.max(1)];
        let mut piv = vec![0; n];
        let mut det_sign = 1.0;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + uw).min(n - 1);
            let mut p = k;
            let mut best = u[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = u[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= zero_tol || !best.is_finite() {
                return Err(k);
            }
            piv[k] = p;
            if p != k {
                det_sign = -det_sign;
                for j in k..=last_col {
                    u.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = u[idx(k, k)];
            for i in k + 1..=last_row {
                let m = u[idx(i, k)] / pivot;
                mult[k * kl + (i - k - 1)] = m;
                u[idx(i, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        u[idx(i, j)] -= m * u[idx(k, j)];
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, uw, u, mult, piv, det_sign })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, kl, uw) = (self.n, self.kl, self.uw);
        let w = kl + uw + 1;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                x[i] -= self.mult[k * kl + (i - k - 1)] * xk;
            }
        }
        for i in (0..n).rev() {
            let base = i * w + kl - i;
            let mut acc = x[i];
            for j in i + 1..=(i + uw).min(n - 1) {
                acc -= self.u[base + j] * x[j];
            }
            x[i] = acc / self.u[base + i];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let w = self.kl + self.uw + 1;
        (0..self.n).fold(self.det_sign, |d, i| d * self.u[i * w + self.kl])
    }
}

/// Result of a Collatz–Wielandt power iteration on a nonnegative matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerronEstimate {
    pub value: f64,
    /// Certified bracket: `lower <= rho <= upper`.
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const PERRON_TOL: f64 = 1e-10;
pub const PERRON_MAX_ITER: usize = 5000;
pub const DENSE_EIG_LIMIT: usize = 512;

/// Spectral radius bracket of a nonnegative band matrix.
///
/// Iterates with the shifted matrix `A + sI` so that imprimitive (e.g.
/// bipartite tridiagonal) matrices still converge; the ratios
/// `(Ax)_i / x_i` for positive `x` bracket the Perron root.
pub fn perron_root(a: &Banded, tol: f64, max_iter: usize) -> PerronEstimate {
    let n = a.order();
    let row_max = a.abs_row_sums().into_iter().fold(0.0, f64::max);
    if n == 0 || row_max == 0.0 {
        return PerronEstimate { value: 0.0, lower: 0.0, upper: 0.0, converged: true, iterations: 0 };
    }
    // iterate on the nonzeros only; derived band matrices are often sparse inside the band
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut entries = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        for j in a.cols(i) {
            let v = a.get(i, j);
            if v != 0.0 {
                entries.push((j, v));
            }
        }
        row_ptr.push(entries.len());
    }
    let shift = 0.5 * row_max;
    let mut x = vec![1.0; n];
    let mut ax = vec![0.0; n];
    let (mut lower, mut upper) = (0.0f64, row_max);
    for it in 1..=max_iter {
        for (i, o) in ax.iter_mut().enumerate() {
            *o = entries[row_ptr[i]..row_ptr[i + 1]].iter().map(|&(j, v)| v * x[j]).sum();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (num, den) in ax.iter().zip(&x) {
            let r = num / den;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower = lower.max(lo);
        upper = upper.min(hi);
        if upper - lower <= tol * upper || upper <= 1e-15 * row_max {
            let value = if upper <= 1e-15 * row_max { 0.0 } else { 0.5 * (lower + upper) };
            return PerronEstimate { value, lower, upper, converged: true, iterations: it };
        }
        let mut scale = 0.0f64;
        for (xi, axi) in x.iter_mut().zip(&ax) {
            *xi = axi + shift * *xi;
            scale = scale.max(*xi);
        }
        for xi in x.iter_mut() {
            *xi /= scale;
        }
    }
    PerronEstimate { value: upper, lower, upper, converged: false, iterations: max_iter }
}

/// Spectral radius of a nonnegative matrix: power iteration, with a dense
/// eigenvalue fallback for small orders when the iteration stalls.
pub fn spectral_radius_nonneg(a: &Banded) -> PerronEstimate {
    let est = perron_root(a, PERRON_TOL, PERRON_MAX_ITER);
    if est.converged || a.order() > DENSE_EIG_LIMIT {
        return est;
    }
    let rho = spectral_radius_dense(&a.to_dense());
    PerronEstimate { value: rho, lower: rho, upper: rho, converged: true, iterations: est.iterations }
}

/// Spectral radius of an arbitrary dense matrix via its Schur form.
pub fn spectral_radius_dense(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub const TWO_NORM_LIMIT: usize = 2000;
const SVD_LIMIT: usize = 512;

/// Spectral norm. Exact SVD for small orders, power iteration on `AᵀA`
/// otherwise. Returns NaN above [`TWO_NORM_LIMIT`].
pub fn two_norm(a: &Banded) -> f64 {
    let n = a.order();
    if n == 0 {
        return 0.0;
    }
    if n <= SVD_LIMIT {
        return dense_norm(&a.to_dense(), NormTag::Two);
    }
    if n > TWO_NORM_LIMIT {
        return f64::NAN;
    }
    let at = a.transpose();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma2 = 0.0;
    for _ in 0..20_000 {
        let y = at.matvec(&a.matvec(&x));
        let lambda: f64 = y.iter().zip(&x).map(|(p, q)| p * q).sum();
        let nrm = vec_norm(&y, NormTag::Two);
        if nrm == 0.0 {
            return 0.0;
        }
        x = y.into_iter().map(|v| v / nrm).collect();
        if (lambda - sigma2).abs() <= 1e-14 * lambda.abs() {
            sigma2 = lambda;
            break;
        }
        sigma2 = lambda;
    }
    sigma2.max(0.0).sqrt()
}

pub fn dense_norm(a: &DMatrix<f64>, tag: NormTag) -> f64 {
    match tag {
        NormTag::Inf => a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
        NormTag::One => a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
        NormTag::Two => {
            if a.nrows() == 0 {
                0.0
            } else {
                a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
            }
        }
    }
}

/// 1-norm condition number of a dense matrix; infinite when singular.
pub fn condition_one(a: &DMatrix<f64>) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => {
            let c = dense_norm(a, NormTag::One) * dense_norm(&inv, NormTag::One);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}
