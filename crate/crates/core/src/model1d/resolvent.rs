use super::classify::{classify_gc, GcClass};
use super::Potential1D;
use crate::error::{Error, Result};
use crate::graph::{star_graph, EdgeLength};
use crate::linalg::{c, loglog_slope, sqrt_upper, tridiag_solve};
use crate::solver::{resolvent_apply, GraphFunction};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolvent1dConfig {
    /// Upper bound for the grid step; the grid is refined to put every cell
    /// boundary of the scaled potential on a node. Default ε/16.
    pub h: Option<f64>,
    /// Half-width L of the computational interval [−L, L].
    pub truncation: Option<f64>,
    /// Samples of f per unit length on the graph side.
    pub graph_density: usize,
}

impl Default for Resolvent1dConfig {
    fn default() -> Self {
        Resolvent1dConfig {
            h: None,
            truncation: None,
            graph_density: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent1dSolution {
    pub x0: f64,
    pub h: f64,
    pub u: Vec<Complex64>,
    /// ‖Au − f‖ / ‖f‖ of the discrete system.
    pub residual: f64,
}

impl Resolvent1dSolution {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }
}

/// Grid step dividing every scaled cell width 2ε/n and not above `h_max`.
fn aligned_step(v: &Potential1D, eps: f64, h_max: f64) -> f64 {
    let cw = eps * v.cell_width();
    let q = (cw / h_max).ceil().max(1.0);
    cw / q
}

/// Solves (−d² + ε⁻²v(t/ε) − λ)u = f on [−L, L] with outgoing Robin ends.
pub fn resolvent_1d(
    v: &Potential1D,
    eps: f64,
    lambda: Complex64,
    f: &dyn Fn(f64) -> Complex64,
    support: (f64, f64),
    cfg: &Resolvent1dConfig,
) -> Result<Resolvent1dSolution> {
    if !(eps > 0.0) {
        return Err(Error::invalid("ε must be positive"));
    }
    let (a, b) = support;
    if !(a < b) || (a < eps && b > -eps) {
        return Err(Error::invalid(format!(
            "support [{a}, {b}] of f must avoid [−ε, ε]"
        )));
    }
    let k = sqrt_upper(lambda);
    if k.norm() == 0.0 {
        return Err(Error::invalid("λ = 0 is not allowed"));
    }
    let h = aligned_step(v, eps, cfg.h.unwrap_or(eps / 16.0));
    let reach = a.abs().max(b.abs()).max(eps);
    let l_req = cfg.truncation.unwrap_or(if k.im > 1e-12 {
        reach + 30.0 / k.im
    } else {
        reach + 50.0
    });
    let half = (l_req / h).ceil() as usize;
    let n = 2 * half + 1;
    let x0 = -(half as f64) * h;
    let ih2 = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(n);
    let mut sub = vec![c(-ih2, 0.0); n];
    let mut sup = vec![c(-ih2, 0.0); n];
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + i as f64 * h;
        let pot = v.at(x / eps) / (eps * eps);
        diag.push(c(2.0 * ih2 + pot, 0.0) - lambda);
        rhs.push(if x >= a && x <= b { f(x) } else { c(0.0, 0.0) });
    }
    let robin = 2.0 * h * k * ih2 * Complex64::new(0.0, 1.0);
    diag[0] -= robin;
    diag[n - 1] -= robin;
    sup[0] = c(-2.0 * ih2, 0.0);
    sub[n - 1] = c(-2.0 * ih2, 0.0);
    let u = tridiag_solve(&sub, &diag, &sup, &rhs);
    let mut rnum = 0.0;
    let mut rden = 0.0;
    for i in 0..n {
        let mut r = diag[i] * u[i] - rhs[i];
        if i > 0 {
            r += sub[i] * u[i - 1];
        }
        if i + 1 < n {
            r += sup[i] * u[i + 1];
        }
        rnum += r.norm_sqr();
        rden += rhs[i].norm_sqr();
    }
    let residual = if rden > 0.0 { (rnum / rden).sqrt() } else { rnum.sqrt() };
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::Resonance(format!(
            "1-D resolvent residual {residual:.2e} at λ = {lambda}"
        )));
    }
    Ok(Resolvent1dSolution { x0, h, u, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrPoint {
    pub eps: f64,
    /// ‖u_ε + ζ‖ on the support of f (ζ solves (d² + λ)ζ = f on the graph).
    pub error: f64,
    pub norm_f: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrConvergence {
    pub class: GcClass,
    pub points: Vec<TrPoint>,
    /// Log-log slope of the relative error against ε.
    pub slope: f64,
}

/// f(x) = sin²(π(x − a)/(b − a)) on [a, b].
pub fn bump(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x <= a || x >= b {
            0.0
        } else {
            (PI * (x - a) / (b - a)).sin().powi(2)
        }
    }
}

/// Compares the thin-potential resolvent with the limit-graph resolvent on
/// the two-edge star for a bump source on `support`.
pub fn tr_convergence(
    v: &Potential1D,
    lambda: Complex64,
    eps_list: &[f64],
    support: (f64, f64),
    cfg: &Resolvent1dConfig,
) -> Result<TrConvergence> {
    if eps_list.len() < 2 {
        return Err(Error::invalid("need at least two ε values"));
    }
    let class = classify_gc(v)?;
    let graph = star_graph(2, &[EdgeLength::Infinite, EdgeLength::Infinite])?
        .with_condition(0, class.limit_condition())?;
    let (a, b) = support;
    let fb = bump(a, b);
    let (edge, sign) = if a >= 0.0 { (1, 1.0) } else { (0, -1.0) };
    let span = a.abs().max(b.abs());
    let mut ns = (cfg.graph_density as f64 * span).ceil() as usize + 1;
    if ns % 2 == 0 {
        ns += 1;
    }
    let gf = GraphFunction::from_fn(&graph, ns, span, |e, t| {
        if e == edge {
            c(fb(sign * t), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let field = resolvent_apply(&graph, lambda, 0.0, &gf)?;
    let fz = |x: f64| c(fb(x), 0.0);
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let sol = resolvent_1d(v, eps, lambda, &fz, support, cfg)?;
        let mut err2 = 0.0;
        let mut f2 = 0.0;
        for (i, u) in sol.u.iter().enumerate() {
            let x = sol.x(i);
            if x < a || x > b {
                continue;
            }
            let w = if (x - a).abs() < 0.5 * sol.h || (x - b).abs() < 0.5 * sol.h {
                0.5 * sol.h
            } else {
                sol.h
            };
            let zeta = field.eval(edge, sign * x);
            err2 += w * (u + zeta).norm_sqr();
            f2 += w * fb(x).powi(2);
        }
        let error = err2.sqrt();
        let norm_f = f2.sqrt();
        points.push(TrPoint {
            eps,
            error,
            norm_f,
            rel_error: error / norm_f,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.eps).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rel_error).collect();
    Ok(TrConvergence {
        class: class.class,
        points,
        slope: loglog_slope(&xs, &ys),
    })
}
