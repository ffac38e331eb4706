//! The thin-potential line model H_ε = −d²/dt² + ε⁻²v(t/ε), v supported on [−1, 1].
//!
//! Scattering data are referenced to the origin. The 2×2 matrices use the
//! edge order `[−, +]` (left half-line first) with the outward coordinate
//! t = |x| on each half-line, so they plug straight into a two-edge star.

mod classify;
mod heat;
mod resolvent;

pub use classify::{classify_gc, tune_two_step, GcClass, GcClassification, Side};
pub use heat::{heat_1d, heat_1d_vs_graph, Heat1dConfig, Heat1dResult, HeatComparison};
pub use resolvent::{
    bump, resolvent_1d, tr_convergence, Resolvent1dConfig, Resolvent1dSolution, TrConvergence,
    TrPoint,
};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, I};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Piecewise-constant potential on a uniform partition of [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential1D {
    values: Vec<f64>,
}

impl Potential1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("potential needs at least one cell"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("potential values must be finite"));
        }
        Ok(Potential1D { values })
    }

    pub fn zero() -> Self {
        Potential1D { values: vec![0.0] }
    }

    pub fn constant(v: f64) -> Self {
        Potential1D { values: vec![v] }
    }

    /// `a` on [−1, 0], `b` on [0, 1].
    pub fn two_step(a: f64, b: f64) -> Self {
        Potential1D { values: vec![a, b] }
    }

    /// Midpoint sampling of `f` on `cells` cells.
    pub fn from_fn(f: impl Fn(f64) -> f64, cells: usize) -> Result<Self> {
        let w = 2.0 / cells as f64;
        Self::new((0..cells).map(|k| f(-1.0 + (k as f64 + 0.5) * w)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn cell_width(&self) -> f64 {
        2.0 / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// v(s); zero outside [−1, 1], mean of the two neighbours on a cell boundary.
    pub fn at(&self, s: f64) -> f64 {
        if s.abs() > 1.0 {
            return 0.0;
        }
        let n = self.values.len();
        let w = self.cell_width();
        let pos = (s + 1.0) / w;
        let k = pos.floor();
        let frac = pos - k;
        let k = k as isize;
        let get = |i: isize| {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                self.values[i as usize]
            }
        };
        if frac.abs() < 1e-12 {
            0.5 * (get(k - 1) + get(k))
        } else {
            get(k)
        }
    }

    /// v(−s).
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Potential1D { values }
    }
}

/// cos(q w) and sin(q w)/q as entire functions of q² (real argument).
pub(crate) fn cell_cs_real(q2: f64, w: f64) -> (f64, f64) {
    let x = q2 * w * w;
    if x.abs() < 1e-6 {
        let cc = 1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0;
        let s = w * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0);
        (cc, s)
    } else if q2 > 0.0 {
        let q = q2.sqrt();
        ((q * w).cos(), (q * w).sin() / q)
    } else {
        let q = (-q2).sqrt();
        ((q * w).cosh(), (q * w).sinh() / q)
    }
}

/// Complex-argument counterpart of [`cell_cs_real`].
pub(crate) fn cell_cs(q2: Complex64, w: f64) -> (Complex64, Complex64) {
    let x = q2 * w * w;
    if x.norm() < 1e-6 {
        let cc = 1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0;
        let s = (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0) * w;
        (cc, s)
    } else {
        let q = q2.sqrt();
        ((q * w).cos(), (q * w).sin() / q)
    }
}

/// Real transfer matrix mapping (ψ, ψ')(−1) to (ψ, ψ')(+1) for −ψ'' + vψ = Eψ.
pub fn transfer_matrix(v: &Potential1D, energy: f64) -> [[f64; 2]; 2] {
    let w = v.cell_width();
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for &vi in &v.values {
        let q2 = energy - vi;
        let (cc, s) = cell_cs_real(q2, w);
        let cell = [[cc, s], [-q2 * s, cc]];
        m = mul2(&cell, &m);
    }
    m
}

/// Transfer matrix at complex energy.
pub fn transfer_matrix_complex(v: &Potential1D, energy: Complex64) -> [[Complex64; 2]; 2] {
    let w = v.cell_width();
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let mut m = [[one, zero], [zero, one]];
    for &vi in &v.values {
        let q2 = energy - vi;
        let (cc, s) = cell_cs(q2, w);
        let cell = [[cc, s], [-q2 * s, cc]];
        m = mul2(&cell, &m);
    }
    m
}

fn mul2<T>(a: &[[T; 2]; 2], b: &[[T; 2]; 2]) -> [[T; 2]; 2]
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<Output = T>,
{
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Relative size of the zero-energy exit slope below which the threshold is
/// treated as flat.
pub const FLAT_TOL: f64 = 1e-9;

/// Scattering matrix of the unscaled potential at wave number κ, so that
/// the thin operator at spectral parameter λ corresponds to κ = ε√λ.
pub fn scattering_kappa(v: &Potential1D, kappa: Complex64) -> CMat {
    if kappa.norm() < 1e-14 {
        return threshold_matrix(v);
    }
    let m = transfer_matrix_complex(v, kappa * kappa);
    let (m11, m12, m21, m22) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let k2 = kappa * kappa;
    let ik = I * kappa;
    let n22 = ik * (m11 + m22) + k2 * m12 - m21;
    let ph = (-2.0 * ik).exp();
    let t00 = -ph * (ik * (m11 - m22) - k2 * m12 - m21) / n22;
    let t01 = 2.0 * ik * ph / n22;
    let t11 = ph * (ik * (m11 - m22) + k2 * m12 + m21) / n22;
    CMat::from_row_slice(2, 2, &[t00, t01, t01, t11])
}

/// The κ → 0 limit: full reflection unless the zero-energy solution is flat.
pub fn threshold_matrix(v: &Potential1D) -> CMat {
    let m = transfer_matrix(v, 0.0);
    let (m11, m21, m22) = (m[0][0], m[1][0], m[1][1]);
    let scale = m[0][0].abs().max(m[0][1].abs()).max(m22.abs()).max(1.0);
    if m21.abs() > FLAT_TOL * scale {
        return -CMat::identity(2, 2);
    }
    let s = m11 + m22;
    CMat::from_row_slice(
        2,
        2,
        &[
            c(-(m11 - m22) / s, 0.0),
            c(2.0 / s, 0.0),
            c(2.0 / s, 0.0),
            c((m11 - m22) / s, 0.0),
        ],
    )
}

/// T(λ) of H_ε for λ off the negative axis (κ = ε√λ on the upper branch).
pub fn scattering_1d(v: &Potential1D, eps: f64, lambda: Complex64) -> Result<CMat> {
    if eps <= 0.0 {
        return Err(Error::invalid("ε must be positive"));
    }
    if lambda.im == 0.0 && lambda.re <= 0.0 {
        return Err(Error::invalid("λ must be positive"));
    }
    let kappa = eps * crate::linalg::sqrt_upper(lambda);
    Ok(scattering_kappa(v, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_transfer_at_zero_energy() {
        let m = transfer_matrix(&Potential1D::zero(), 0.0);
        assert_eq!(m, [[1.0, 2.0], [0.0, 1.0]]);
    }

    #[test]
    fn free_transfer_at_quarter_pi_squared() {
        let m = transfer_matrix(&Potential1D::zero(), PI * PI / 4.0);
        assert!((m[0][0] + 1.0).abs() < 1e-14 && (m[1][1] + 1.0).abs() < 1e-14);
        assert!(m[0][1].abs() < 1e-14 && m[1][0].abs() < 1e-14);
    }

    #[test]
    fn free_line_transmits() {
        let t = scattering_kappa(&Potential1D::zero(), c(0.3, 0.0));
        assert!(t[(0, 0)].norm() < 1e-14);
        assert!((t[(0, 1)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn reflection_swaps_reflection_coefficients() {
        let v = Potential1D::new(vec![1.0, -2.0, 3.0]).unwrap();
        let a = scattering_kappa(&v, c(0.7, 0.0));
        let b = scattering_kappa(&v.reflected(), c(0.7, 0.0));
        assert!((a[(0, 0)] - b[(1, 1)]).norm() < 1e-12);
        assert!((a[(0, 1)] - b[(0, 1)]).norm() < 1e-12);
    }

    #[test]
    fn potential_sampling() {
        let v = Potential1D::two_step(1.0, 3.0);
        assert_eq!(v.at(-0.5), 1.0);
        assert_eq!(v.at(0.0), 2.0);
        assert_eq!(v.at(1.5), 0.0);
    }
}
