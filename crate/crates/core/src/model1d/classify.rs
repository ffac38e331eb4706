use super::{cell_cs_real, transfer_matrix, Potential1D, FLAT_TOL};
use crate::conditions::{ProjectionPair, VertexCondition};
use crate::error::{Error, Result};
use crate::linalg::RMat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Limiting gluing condition of the thin-potential line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GcClass {
    DirichletGeneric,
    /// Neumann on `neumann_side`, Dirichlet on the other.
    MixedDN { neumann_side: Side },
    /// Continuity plus ρ₋w'₋ + ρ₊w'₊ = 0, normalized to ρ₋ρ₊ = 1.
    GeneralizedKirchhoff { rho_minus: f64, rho_plus: f64 },
}

/// Zero-energy solution started flat from one side: values at entry and exit
/// and the exit slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub entry_value: f64,
    pub exit_value: f64,
    pub exit_slope: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcClassification {
    pub class: GcClass,
    /// Started with ψ(−1) = 1, ψ'(−1) = 0, read at +1.
    pub left: Probe,
    /// Started with ψ(1) = 1, ψ'(1) = 0, read at −1 (slope in −t direction).
    pub right: Probe,
}

impl GcClassification {
    /// The condition on the two-edge star with edge order [−, +].
    pub fn limit_condition(&self) -> VertexCondition {
        match self.class {
            GcClass::DirichletGeneric => VertexCondition::Dirichlet,
            GcClass::MixedDN { neumann_side } => {
                let dir = match neumann_side {
                    Side::Left => 1,
                    Side::Right => 0,
                };
                let mut p = RMat::zeros(2, 2);
                p[(dir, dir)] = 1.0;
                VertexCondition::Projection(
                    ProjectionPair::from_projection(&p).expect("coordinate projection"),
                )
            }
            GcClass::GeneralizedKirchhoff {
                rho_minus,
                rho_plus,
            } => VertexCondition::GeneralizedKirchhoff {
                rho: vec![rho_minus, rho_plus],
            },
        }
    }
}

/// Smallest value of the zero-energy solution on [−1, 1], sampled on
/// `sub` points per cell, for initial data (ψ, ψ') at the left end.
fn min_along(v: &Potential1D, psi: f64, dpsi: f64, sub: usize) -> f64 {
    let w = v.cell_width();
    let (mut p, mut d) = (psi, dpsi);
    let mut lo = p;
    for &vi in v.values() {
        let q2 = -vi;
        for k in 1..=sub {
            let (cc, s) = cell_cs_real(q2, w * k as f64 / sub as f64);
            lo = lo.min(cc * p + s * d);
        }
        let (cc, s) = cell_cs_real(q2, w);
        let np = cc * p + s * d;
        let nd = -q2 * s * p + cc * d;
        p = np;
        d = nd;
    }
    lo
}

pub fn classify_gc(v: &Potential1D) -> Result<GcClassification> {
    let m = transfer_matrix(v, 0.0);
    let (m11, m21, m22) = (m[0][0], m[1][0], m[1][1]);
    let left = Probe {
        entry_value: 1.0,
        exit_value: m11,
        exit_slope: m21,
        min_value: min_along(v, 1.0, 0.0, 16),
    };
    // Backward from (1, 0) at +1: (ψ, ψ')(−1) = M⁻¹(1, 0) = (m22, −m21).
    let right = Probe {
        entry_value: 1.0,
        exit_value: m22,
        exit_slope: m21,
        min_value: min_along(v, m22, -m21, 16),
    };
    let flat_l = m11 > 0.0 && m21.abs() <= FLAT_TOL * m11.abs().max(1.0);
    let flat_r = m22 > 0.0 && m21.abs() <= FLAT_TOL * m22.abs().max(1.0);
    let class = match (flat_l, flat_r) {
        (true, true) => {
            if left.min_value <= 0.0 || right.min_value <= 0.0 {
                return Err(Error::Classification(format!(
                    "flat zero-energy solution changes sign (min {:.3e}); the junction has \
                     negative spectrum and the case is not classified",
                    left.min_value.min(right.min_value)
                )));
            }
            let r = (m22 / m11).sqrt();
            GcClass::GeneralizedKirchhoff {
                rho_minus: r,
                rho_plus: 1.0 / r,
            }
        }
        (true, false) => {
            check_positive(&left)?;
            GcClass::MixedDN {
                neumann_side: Side::Right,
            }
        }
        (false, true) => {
            check_positive(&right)?;
            GcClass::MixedDN {
                neumann_side: Side::Left,
            }
        }
        (false, false) => {
            if left.min_value <= 0.0 && right.min_value <= 0.0 {
                return Err(Error::Classification(format!(
                    "no positive zero-energy solution (probe minima {:.3e}, {:.3e})",
                    left.min_value, right.min_value
                )));
            }
            GcClass::DirichletGeneric
        }
    };
    Ok(GcClassification { class, left, right })
}

fn check_positive(p: &Probe) -> Result<()> {
    if p.min_value <= 0.0 {
        return Err(Error::Classification(format!(
            "flat zero-energy solution is not positive (min {:.3e})",
            p.min_value
        )));
    }
    Ok(())
}

/// For v = a on [−1, 0] and b on [0, 1], finds the b closest to 0 at which
/// the zero-energy solution is flat on both sides (m21 = 0), keeping the
/// solution positive. Scans b downward then bisects.
pub fn tune_two_step(a: f64) -> Result<Potential1D> {
    let g = |b: f64| transfer_matrix(&Potential1D::two_step(a, b), 0.0)[1][0];
    let step = 0.05;
    let mut hi = 0.0;
    let mut ghi = g(hi);
    if ghi == 0.0 {
        return Ok(Potential1D::two_step(a, 0.0));
    }
    let dir = if ghi > 0.0 { -1.0 } else { 1.0 };
    let mut lo = hi;
    let mut found = false;
    for _ in 0..4000 {
        lo = hi + dir * step;
        let glo = g(lo);
        if glo.signum() != ghi.signum() {
            found = true;
            break;
        }
        hi = lo;
        ghi = glo;
    }
    if !found {
        return Err(Error::numerical(format!("no flat two-step partner found for a = {a}")));
    }
    let (mut x0, mut x1) = (hi, lo);
    let g0 = g(x0);
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        if mid == x0 || mid == x1 {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            x0 = mid;
            x1 = mid;
            break;
        }
        if gm.signum() == g0.signum() {
            x0 = mid;
        } else {
            x1 = mid;
        }
    }
    let b = if g(x0).abs() <= g(x1).abs() { x0 } else { x1 };
    let v = Potential1D::two_step(a, b);
    match classify_gc(&v)?.class {
        GcClass::GeneralizedKirchhoff { .. } => Ok(v),
        other => Err(Error::numerical(format!(
            "tuned two-step (a = {a}, b = {b}) classifies as {other:?}"
        ))),
    }
}
