//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Div, Mul, Sub};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square root on the branch Im ≥ 0, cut along the positive real axis.
/// Positive reals map to positive roots.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Count of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&smax) if smax == 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&x| x > rel_tol * smax).count(),
    }
}

pub fn det(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        return c(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Symmetric eigen-decomposition with eigenvalues in ascending order.
pub fn sym_eigen_sorted(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Least-squares polynomial in a real sample variable, evaluable at complex points.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
    pub scale: f64,
}

impl Poly {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let x = z / self.scale;
        self.coeffs
            .iter()
            .rev()
            .fold(c(0.0, 0.0), |acc, &a| acc * x + a)
    }
}

/// Fits `ys ≈ Σ a_k x^k` for k ≤ degree. Returns the polynomial and the
/// largest absolute residual at the samples.
pub fn polyfit(xs: &[f64], ys: &[Complex64], degree: usize) -> (Poly, f64) {
    assert_eq!(xs.len(), ys.len());
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let n = xs.len();
    let p = degree + 1;
    let a = CMat::from_fn(n, p, |i, k| c((xs[i] / scale).powi(k as i32), 0.0));
    let b = CMat::from_fn(n, 1, |i, _| ys[i]);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .unwrap_or_else(|_| CMat::zeros(p, 1));
    let poly = Poly {
        coeffs: coef.iter().copied().collect(),
        scale,
    };
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (poly.eval(c(x, 0.0)) - y).norm())
        .fold(0.0, f64::max);
    (poly, resid)
}

/// Thomas algorithm for a tridiagonal system. `sub[i]` couples row i to
/// i-1 (sub[0] unused), `sup[i]` couples row i to i+1.
pub fn tridiag_solve<T>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T>
where
    T: Copy + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let n = diag.len();
    let mut cp = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    cp.push(sup[0] / diag[0]);
    dp.push(rhs[0] / diag[0]);
    for i in 1..n {
        let m = diag[i] - sub[i] * cp[i - 1];
        cp.push(sup[i] / m);
        dp.push((rhs[i] - sub[i] * dp[i - 1]) / m);
    }
    let mut x = dp.clone();
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Composite Simpson weights for `n` (odd) equally spaced samples.
pub fn simpson_weights(n: usize, h: f64) -> Option<Vec<f64>> {
    if n < 3 || n % 2 == 0 {
        return None;
    }
    Some(
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect(),
    )
}

/// Least-squares line through (x, y): (slope, intercept, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icpt, rms)
}

/// Log-log slope of `err` against `h`.
pub fn loglog_slope(h: &[f64], err: &[f64]) -> f64 {
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Unitarity and symmetry defects in operator norm.
pub fn unitary_symmetric_defects(t: &CMat) -> (f64, f64) {
    let n = t.nrows();
    let u = op_norm(&(t.adjoint() * t - identity(n)));
    let s = op_norm(&(t - t.transpose()));
    (u, s)
}
