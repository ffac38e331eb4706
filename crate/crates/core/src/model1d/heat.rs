use super::classify::{classify_gc, GcClass};
use super::{cell_cs_real, transfer_matrix, Potential1D};
use crate::conditions::VertexCondition;
use crate::error::{Error, Result};
use crate::graph::{star_graph, EdgeLength};
use crate::heat::{heat_solve, HeatConfig};
use crate::linalg::tridiag_solve;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heat1dConfig {
    pub dtau: f64,
    /// Grid step bound; refined to align with the scaled potential cells.
    pub h: Option<f64>,
    /// Neumann walls at ±truncation.
    pub truncation: f64,
}

impl Default for Heat1dConfig {
    fn default() -> Self {
        Heat1dConfig {
            dtau: 1e-3,
            h: None,
            truncation: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heat1dResult {
    pub x0: f64,
    pub h: f64,
    pub tau: f64,
    /// Ground-state factor ψ₀(x/ε) on the grid.
    pub psi0: Vec<f64>,
    /// Final u_ε.
    pub u: Vec<f64>,
    /// Final w_ε = u_ε / ψ₀.
    pub w: Vec<f64>,
    /// ∫ψ₀ u dx at the start and at the end.
    pub mass_initial: f64,
    pub mass_final: f64,
    pub rho: (f64, f64),
}

impl Heat1dResult {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }
}

/// Flat zero-energy solution sampled at s (unscaled variable), normalized
/// so that ψ² equals the Kirchhoff weights outside [−1, 1].
fn ground_state(v: &Potential1D, rho_minus: f64, s: &[f64]) -> Vec<f64> {
    let m = transfer_matrix(v, 0.0);
    let scale = rho_minus.sqrt();
    let w = v.cell_width();
    s.iter()
        .map(|&x| {
            if x <= -1.0 {
                return scale;
            }
            if x >= 1.0 {
                return scale * (m[0][0] + m[1][0] * (x - 1.0));
            }
            let (mut p, mut d) = (1.0, 0.0);
            let mut left = -1.0;
            for &vi in v.values() {
                let right = left + w;
                let q2 = -vi;
                if x <= right {
                    let (cc, sn) = cell_cs_real(q2, x - left);
                    return scale * (cc * p + sn * d);
                }
                let (cc, sn) = cell_cs_real(q2, w);
                let np = cc * p + sn * d;
                d = -q2 * sn * p + cc * d;
                p = np;
                left = right;
            }
            scale * p
        })
        .collect()
}

fn trapezoid(h: f64, y: &[f64]) -> f64 {
    let n = y.len();
    h * (y[1..n - 1].iter().sum::<f64>() + 0.5 * (y[0] + y[n - 1]))
}

/// Crank–Nicolson for ∂u/∂τ = u'' − ε⁻²v(x/ε)u with u(0) = φ·ψ₀(x/ε).
pub fn heat_1d(
    v: &Potential1D,
    eps: f64,
    phi: &dyn Fn(f64) -> f64,
    tau_end: f64,
    cfg: &Heat1dConfig,
) -> Result<Heat1dResult> {
    let cls = classify_gc(v)?;
    let (rm, rp) = match cls.class {
        GcClass::GeneralizedKirchhoff {
            rho_minus,
            rho_plus,
        } => (rho_minus, rho_plus),
        other => {
            return Err(Error::Classification(format!(
                "heat limit needs a flat positive ground state, potential classifies as {other:?}"
            )))
        }
    };
    if !(eps > 0.0) || !(cfg.dtau > 0.0) || !(cfg.truncation > eps) {
        return Err(Error::invalid("need ε > 0, dτ > 0 and truncation beyond ε"));
    }
    let cw = eps * v.cell_width();
    let h = cw / (cw / cfg.h.unwrap_or(eps / 16.0)).ceil().max(1.0);
    let half = (cfg.truncation / h).round() as usize;
    let n = 2 * half + 1;
    let x0 = -(half as f64) * h;
    let xs: Vec<f64> = (0..n).map(|i| x0 + i as f64 * h).collect();
    let s: Vec<f64> = xs.iter().map(|x| x / eps).collect();
    let psi0 = ground_state(v, rm, &s);
    let pot: Vec<f64> = xs.iter().map(|x| v.at(x / eps) / (eps * eps)).collect();
    let mut u: Vec<f64> = xs.iter().zip(&psi0).map(|(x, p)| phi(*x) * p).collect();
    let mass = |u: &[f64]| {
        let y: Vec<f64> = u.iter().zip(&psi0).map(|(a, b)| a * b).collect();
        trapezoid(h, &y)
    };
    let mass_initial = mass(&u);
    let ih2 = 1.0 / (h * h);
    let th = 0.5 * cfg.dtau;
    // A = −D² + V with Neumann ghost rows; solve (I + θA)u' = (I − θA)u.
    let mut sub = vec![-th * ih2; n];
    let mut sup = vec![-th * ih2; n];
    let diag: Vec<f64> = pot.iter().map(|p| 1.0 + th * (2.0 * ih2 + p)).collect();
    sup[0] = -2.0 * th * ih2;
    sub[n - 1] = -2.0 * th * ih2;
    let steps = (tau_end / cfg.dtau).round() as usize;
    let mut rhs = vec![0.0; n];
    for _ in 0..steps {
        for i in 0..n {
            let lft = if i == 0 { u[1] } else { u[i - 1] };
            let rgt = if i + 1 == n { u[n - 2] } else { u[i + 1] };
            let au = (2.0 * u[i] - lft - rgt) * ih2 + pot[i] * u[i];
            rhs[i] = u[i] - th * au;
        }
        u = tridiag_solve(&sub, &diag, &sup, &rhs);
    }
    let w = u.iter().zip(&psi0).map(|(a, b)| a / b).collect();
    let mass_final = mass(&u);
    Ok(Heat1dResult {
        x0,
        h,
        tau: steps as f64 * cfg.dtau,
        psi0,
        mass_final,
        u,
        w,
        mass_initial,
        rho: (rm, rp),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatComparison {
    pub eps: f64,
    pub tau: f64,
    /// max |w_ε − w| over |x| > δ.
    pub max_error: f64,
    pub relative_mass_drift: f64,
    /// Weighted mass ρ∫w on the left and right half at the final time, 1-D model and graph.
    pub split_1d: (f64, f64),
    pub split_graph: (f64, f64),
}

/// Runs [`heat_1d`] and the two-edge weighted graph problem with the same
/// grid and compares the extracted w away from the origin.
pub fn heat_1d_vs_graph(
    v: &Potential1D,
    eps: f64,
    phi: &dyn Fn(f64) -> f64,
    tau_end: f64,
    delta: f64,
    cfg: &Heat1dConfig,
) -> Result<HeatComparison> {
    let r = heat_1d(v, eps, phi, tau_end, cfg)?;
    let l = r.h * ((r.u.len() - 1) / 2) as f64;
    let g = star_graph(2, &[EdgeLength::Finite(l), EdgeLength::Finite(l)])?
        .with_condition(
            0,
            VertexCondition::generalized_kirchhoff(vec![r.rho.0, r.rho.1])?,
        )?
        .with_end_conditions(VertexCondition::Neumann)?;
    let hc = HeatConfig::new(cfg.dtau, r.h, r.tau);
    let tr = heat_solve(
        &g,
        |e, t| if e == 0 { phi(-t) } else { phi(t) },
        &hc,
    )?;
    let last = tr.last();
    let half = (r.u.len() - 1) / 2;
    let mut max_error = 0.0f64;
    for (i, wi) in r.w.iter().enumerate() {
        let x = r.x(i);
        if x.abs() <= delta {
            continue;
        }
        let (edge, k) = if i < half { (0, half - i) } else { (1, i - half) };
        max_error = max_error.max((wi - last.values[edge][k]).abs());
    }
    let side = |lo: usize, hi: usize| {
        let y: Vec<f64> = (lo..=hi).map(|i| r.u[i] * r.psi0[i]).collect();
        trapezoid(r.h, &y)
    };
    let split_1d = (side(0, half), side(half, r.u.len() - 1));
    let gm = |e: usize| {
        let h = tr.grids[e].step();
        tr.edge_weights[e] * trapezoid(h, &last.values[e])
    };
    Ok(HeatComparison {
        eps,
        tau: r.tau,
        max_error,
        relative_mass_drift: (r.mass_final - r.mass_initial).abs() / r.mass_initial.abs(),
        split_1d,
        split_graph: (gm(0), gm(1)),
    })
}
