//! Forward problem for −ψ'' + V(t)ψ = (λ − λ₀)ψ on the half-line with
//! ψ(0) = 0 and a Hermitian, compactly supported matrix potential V, so that
//! the continuous spectrum starts at λ₀.

use crate::error::{Error, Result};
use crate::linalg::{c, identity, op_norm, singular_values, solve, CMat, I};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// V = values[k] on [breaks[k], breaks[k+1]).
    Piecewise { breaks: Vec<f64>, values: Vec<CMat> },
    /// Linear interpolation between samples.
    Sampled { ts: Vec<f64>, values: Vec<CMat> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPotential {
    dim: usize,
    repr: Repr,
}

fn check_hermitian(m: &CMat, d: usize, tol: f64) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::invalid("potential sample has the wrong dimension"));
    }
    let defect = op_norm(&(m - m.adjoint()));
    if defect > tol * op_norm(m).max(1.0) {
        return Err(Error::invalid(format!(
            "potential sample is not Hermitian (defect {defect:.2e})"
        )));
    }
    Ok(())
}

impl MatrixPotential {
    pub fn zero(dim: usize) -> Self {
        MatrixPotential {
            dim,
            repr: Repr::Piecewise {
                breaks: vec![0.0],
                values: Vec::new(),
            },
        }
    }

    /// Piecewise-constant potential; `breaks` starts at 0 and is increasing,
    /// with one value per interval. V vanishes beyond the last break.
    pub fn piecewise(breaks: Vec<f64>, values: Vec<CMat>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || breaks[0] != 0.0 {
            return Err(Error::invalid("need breaks 0 = t₀ < … < t_n and n values"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breaks must increase"));
        }
        let dim = values.first().map(|v| v.nrows()).unwrap_or(1);
        for v in &values {
            check_hermitian(v, dim, 1e-12)?;
        }
        Ok(MatrixPotential {
            dim,
            repr: Repr::Piecewise { breaks, values },
        })
    }

    /// Scalar piecewise-constant potential.
    pub fn scalar_piecewise(breaks: Vec<f64>, values: &[f64]) -> Result<Self> {
        Self::piecewise(
            breaks,
            values
                .iter()
                .map(|&v| CMat::from_element(1, 1, c(v, 0.0)))
                .collect(),
        )
    }

    /// Sampled potential on increasing `ts` starting at 0; the last sample
    /// must be below `tail_tol` in norm, and V is zero beyond it.
    pub fn sampled(ts: Vec<f64>, values: Vec<CMat>, tail_tol: f64) -> Result<Self> {
        if ts.len() != values.len() || ts.len() < 2 || ts[0] != 0.0 {
            return Err(Error::invalid("need matching samples starting at t = 0"));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sample points must increase"));
        }
        let dim = values[0].nrows();
        for v in &values {
            check_hermitian(v, dim, 1e-10)?;
        }
        let tail = op_norm(values.last().unwrap());
        if tail > tail_tol {
            return Err(Error::invalid(format!(
                "‖V(R)‖ = {tail:.2e} exceeds the tail tolerance {tail_tol:.1e}"
            )));
        }
        Ok(MatrixPotential {
            dim,
            repr: Repr::Sampled { ts, values },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Support radius R.
    pub fn radius(&self) -> f64 {
        match &self.repr {
            Repr::Piecewise { breaks, .. } => *breaks.last().unwrap(),
            Repr::Sampled { ts, .. } => *ts.last().unwrap(),
        }
    }

    pub fn is_zero(&self) -> bool {
        let vals = match &self.repr {
            Repr::Piecewise { values, .. } | Repr::Sampled { values, .. } => values,
        };
        vals.iter().all(|v| v.iter().all(|x| *x == c(0.0, 0.0)))
    }

    /// max_t ‖V(t)‖.
    pub fn max_norm(&self) -> f64 {
        let vals = match &self.repr {
            Repr::Piecewise { values, .. } | Repr::Sampled { values, .. } => values,
        };
        vals.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// inf_t of the smallest eigenvalue of V(t) (0 outside the support).
    pub fn lower_bound(&self) -> f64 {
        let vals = match &self.repr {
            Repr::Piecewise { values, .. } | Repr::Sampled { values, .. } => values,
        };
        vals.iter()
            .map(|v| {
                let h = v.clone().symmetric_eigenvalues();
                h.iter().fold(f64::INFINITY, |m, x| m.min(*x))
            })
            .fold(0.0, f64::min)
    }

    /// Uᵀ V U for a real orthogonal U.
    pub fn rotated(&self, u: &CMat) -> Self {
        let f = |v: &CMat| u.transpose() * v * u;
        let repr = match &self.repr {
            Repr::Piecewise { breaks, values } => Repr::Piecewise {
                breaks: breaks.clone(),
                values: values.iter().map(f).collect(),
            },
            Repr::Sampled { ts, values } => Repr::Sampled {
                ts: ts.clone(),
                values: values.iter().map(f).collect(),
            },
        };
        MatrixPotential {
            dim: self.dim,
            repr,
        }
    }

    /// Integration segments on which V is smooth, with a sampler each.
    fn segments(&self) -> Vec<(f64, f64, Box<dyn Fn(f64) -> CMat + '_>)> {
        match &self.repr {
            Repr::Piecewise { breaks, values } => (0..values.len())
                .map(|k| {
                    let v = &values[k];
                    (
                        breaks[k],
                        breaks[k + 1],
                        Box::new(move |_t: f64| v.clone()) as Box<dyn Fn(f64) -> CMat>,
                    )
                })
                .collect(),
            Repr::Sampled { ts, values } => (0..ts.len() - 1)
                .map(|k| {
                    let (t0, t1) = (ts[k], ts[k + 1]);
                    let (a, b) = (&values[k], &values[k + 1]);
                    (
                        t0,
                        t1,
                        Box::new(move |t: f64| {
                            let s = (t - t0) / (t1 - t0);
                            a * c(1.0 - s, 0.0) + b * c(s, 0.0)
                        }) as Box<dyn Fn(f64) -> CMat>,
                    )
                })
                .collect(),
        }
    }
}

/// Exact step of (Y, Y')' = (Y', (V − e)Y) across a segment of constant V.
fn constant_step(v: &CMat, e: Complex64, len: f64, y: &CMat, p: &CMat) -> (CMat, CMat) {
    let eig = v.clone().symmetric_eigen();
    let u = eig.eigenvectors;
    let ua = u.adjoint();
    let (yt, pt) = (&ua * y, &ua * p);
    let d = v.nrows();
    let (mut ny, mut np) = (yt.clone(), pt.clone());
    for i in 0..d {
        let q = c(eig.eigenvalues[i], 0.0) - e;
        let w = q.sqrt();
        let wl = w * len;
        let ch = wl.cosh();
        // sinh(wl)/w and w·sinh(wl), with the series near w = 0.
        let (sw, ws) = if wl.norm() < 1e-6 {
            (c(len, 0.0) * (1.0 + wl * wl / 6.0), q * len * (1.0 + wl * wl / 6.0))
        } else {
            (wl.sinh() / w, w * wl.sinh())
        };
        for j in 0..y.ncols() {
            ny[(i, j)] = ch * yt[(i, j)] + sw * pt[(i, j)];
            np[(i, j)] = ws * yt[(i, j)] + ch * pt[(i, j)];
        }
    }
    (&u * ny, &u * np)
}

fn rk4_segment(
    f: &dyn Fn(f64) -> CMat,
    e: Complex64,
    (t0, t1): (f64, f64),
    hmax: f64,
    y: &mut CMat,
    p: &mut CMat,
) {
    let eye = identity(y.nrows());
    let n = ((t1 - t0) / hmax).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let q = |t: f64| f(t) - &eye * e;
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let (qa, qm, qb) = (q(t), q(t + 0.5 * h), q(t + h));
        let k1y = p.clone();
        let k1p = &qa * &*y;
        let y2 = &*y + &k1y * c(0.5 * h, 0.0);
        let p2 = &*p + &k1p * c(0.5 * h, 0.0);
        let k2y = p2.clone();
        let k2p = &qm * &y2;
        let y3 = &*y + &k2y * c(0.5 * h, 0.0);
        let p3 = &*p + &k2p * c(0.5 * h, 0.0);
        let k3y = p3.clone();
        let k3p = &qm * &y3;
        let y4 = &*y + &k3y * c(h, 0.0);
        let p4 = &*p + &k3p * c(h, 0.0);
        let k4y = p4.clone();
        let k4p = &qb * &y4;
        let w = c(h / 6.0, 0.0);
        *y += (k1y + &k2y * c(2.0, 0.0) + &k3y * c(2.0, 0.0) + k4y) * w;
        *p += (k1p + &k2p * c(2.0, 0.0) + &k3p * c(2.0, 0.0) + k4p) * w;
    }
}

/// (Y, Y') at t = R for Y(0) = 0, Y'(0) = I at energy e = λ − λ₀ (complex
/// allowed). Constant pieces are stepped exactly, sampled ones by RK4.
fn propagate(v: &MatrixPotential, e: Complex64) -> (CMat, CMat) {
    let d = v.dim;
    let mut y = CMat::zeros(d, d);
    let mut p = identity(d);
    match &v.repr {
        Repr::Piecewise { breaks, values } => {
            for (k, val) in values.iter().enumerate() {
                let (ny, np) = constant_step(val, e, breaks[k + 1] - breaks[k], &y, &p);
                y = ny;
                p = np;
            }
        }
        Repr::Sampled { .. } => {
            let hmax = 1e-3f64.min(0.1 / (v.max_norm() + e.norm()).sqrt().max(1e-300));
            for (t0, t1, f) in v.segments() {
                rk4_segment(&*f, e, (t0, t1), hmax, &mut y, &mut p);
            }
        }
    }
    (y, p)
}

/// S(λ) with rows indexed by the incident channel: an incoming e^{−ikt}e_p
/// leaves as Σ_j S_pj e^{ikt}e_j, k = √(λ − λ₀).
pub fn forward_scattering_matrix(v: &MatrixPotential, lambda0: f64, lambda: f64) -> Result<CMat> {
    let e = lambda - lambda0;
    if !(e > 0.0) {
        return Err(Error::invalid("λ must exceed λ₀"));
    }
    let k = e.sqrt();
    let r = v.radius();
    let (y, yp) = propagate(v, c(e, 0.0));
    let ik = I * k;
    let fm = (&y * ik - &yp) * ((ik * r).exp() / (2.0 * ik));
    let fp = (&y * ik + &yp) * ((-ik * r).exp() / (2.0 * ik));
    // S_row = (F₊F₋⁻¹)ᵀ, computed as F₋⁻ᵀF₊ᵀ.
    let s = solve(&fm.transpose(), &fp.transpose())
        .ok_or_else(|| Error::Resonance(format!("matching system singular at λ = {lambda}")))?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub lambda: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStates {
    pub states: Vec<BoundState>,
    /// Set when λ_min lies above the a-priori spectral bound λ₀ + inf V, so
    /// states below the floor cannot be excluded.
    pub floor_may_hide_states: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateOptions {
    pub grid: usize,
    pub accept: f64,
    pub null_tol: f64,
}

impl Default for BoundStateOptions {
    fn default() -> Self {
        BoundStateOptions {
            grid: 4000,
            accept: 1e-7,
            null_tol: 1e-6,
        }
    }
}

/// Singular values of the decay-matching matrix κY(R) + Y'(R), relative to
/// ‖κY(R)‖ + ‖Y'(R)‖.
fn matching_svals(v: &MatrixPotential, e: f64) -> Vec<f64> {
    let kappa = (-e).sqrt();
    let (y, yp) = propagate(v, c(e, 0.0));
    let ky = &y * c(kappa, 0.0);
    let scale = (op_norm(&ky) + op_norm(&yp)).max(f64::MIN_POSITIVE);
    let w = ky + yp;
    singular_values(&w).iter().map(|x| x / scale).collect()
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Bound states in [λ_min, λ₀): minima of the smallest relative singular
/// value of κY(R) + Y'(R) on a grid, refined by golden section.
pub fn bound_states(
    v: &MatrixPotential,
    lambda0: f64,
    lambda_min: f64,
    opts: &BoundStateOptions,
) -> Result<BoundStates> {
    if !(lambda_min < lambda0) {
        return Err(Error::invalid("λ_min must lie below λ₀"));
    }
    let floor_may_hide_states = lambda_min > lambda0 + v.lower_bound();
    let e_lo = lambda_min - lambda0;
    let e_hi = -1e-10 * (1.0 + e_lo.abs());
    let n = opts.grid.max(16);
    let es: Vec<f64> = (0..=n)
        .map(|k| e_lo + (e_hi - e_lo) * k as f64 / n as f64)
        .collect();
    let smin = |e: f64| *matching_svals(v, e).last().unwrap();
    let vals: Vec<f64> = es.iter().map(|&e| smin(e)).collect();
    let mut states: Vec<BoundState> = Vec::new();
    for k in 0..=n {
        let left = if k == 0 { f64::INFINITY } else { vals[k - 1] };
        let right = if k == n { f64::INFINITY } else { vals[k + 1] };
        if !(vals[k] <= left && vals[k] < right) {
            continue;
        }
        let a = es[k.saturating_sub(1)];
        let b = es[(k + 1).min(n)];
        let e = golden(&smin, a, b);
        let sv = matching_svals(v, e);
        if *sv.last().unwrap() > opts.accept {
            continue;
        }
        let mult = sv.iter().filter(|&&x| x < opts.null_tol).count().max(1);
        let lambda = e + lambda0;
        if !states.iter().any(|s| (s.lambda - lambda).abs() < 1e-9 * lambda.abs().max(1.0)) {
            states.push(BoundState {
                lambda,
                multiplicity: mult,
            });
        }
    }
    states.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(BoundStates {
        states,
        floor_may_hide_states,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    /// ‖S(λ) − T(λ)‖ per grid point.
    pub defects: Vec<(f64, f64)>,
    pub max_defect: f64,
    pub computed_eigenvalues: Vec<f64>,
    /// |computed − target| per target eigenvalue, NaN when the counts differ.
    pub eigenvalue_mismatch: Vec<f64>,
    pub count_match: bool,
    pub pass: bool,
}

/// Compares S(λ) of `v` with a target T on a λ-grid and the bound states with
/// target eigenvalues.
pub fn compare_to_target(
    v: &MatrixPotential,
    lambda0: f64,
    target: &[(f64, CMat)],
    target_eigs: &[f64],
    lambda_min: f64,
    tol: f64,
) -> Result<TargetReport> {
    let mut defects = Vec::with_capacity(target.len());
    for (lambda, t) in target {
        let s = forward_scattering_matrix(v, lambda0, *lambda)?;
        if s.shape() != t.shape() {
            return Err(Error::invalid("target matrix has the wrong dimension"));
        }
        defects.push((*lambda, op_norm(&(s - t))));
    }
    let max_defect = defects.iter().map(|d| d.1).fold(0.0, f64::max);
    let bs = bound_states(v, lambda0, lambda_min, &BoundStateOptions::default())?;
    let mut computed = Vec::new();
    for s in &bs.states {
        computed.extend(std::iter::repeat(s.lambda).take(s.multiplicity));
    }
    let mut tgt = target_eigs.to_vec();
    tgt.sort_by(f64::total_cmp);
    let count_match = computed.len() == tgt.len();
    let eigenvalue_mismatch: Vec<f64> = if count_match {
        computed.iter().zip(&tgt).map(|(a, b)| (a - b).abs()).collect()
    } else {
        vec![f64::NAN; tgt.len()]
    };
    let pass = max_defect <= tol
        && count_match
        && eigenvalue_mismatch.iter().all(|m| *m <= tol);
    Ok(TargetReport {
        defects,
        max_defect,
        computed_eigenvalues: computed,
        eigenvalue_mismatch,
        count_match,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_reflects_with_minus_identity() {
        let s = forward_scattering_matrix(&MatrixPotential::zero(3), 0.0, 2.0).unwrap();
        assert!((s + identity(3)).iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn zero_potential_has_no_bound_states() {
        let b = bound_states(&MatrixPotential::zero(1), 0.0, -10.0, &Default::default()).unwrap();
        assert!(b.states.is_empty());
        assert!(!b.floor_may_hide_states);
    }
}
