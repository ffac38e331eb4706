use super::secular::{SecularSystem, MU_MIN_CUTOFF};
use crate::conditions::rows_at_z;
use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph};
use crate::linalg::{c, RMat};
use crate::roots::{find_zeros, Rect, RootOptions};
use num_complex::Complex64;

/// Disk |μ − center| < radius of the μ-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWindow {
    pub center: Complex64,
    pub radius: f64,
    /// Relative size of the ±√μ band added below the real axis.
    pub strip: f64,
}

impl SpectralWindow {
    pub fn disk(radius: f64) -> Self {
        SpectralWindow {
            center: c(0.0, 0.0),
            radius,
            strip: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Real-axis scan of a real determinant (ε = 0, compact, symmetric conditions).
    RealScan,
    /// Argument principle in the √μ plane.
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub mu: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub method: Option<EigenMethod>,
    pub roots: RootOptions,
    pub retries: usize,
    /// Relative singular-value level counted as null in the real scan.
    pub null_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            method: None,
            roots: RootOptions::default(),
            retries: 4,
            null_tol: 1e-7,
        }
    }
}

fn secular_z(graph: &MetricGraph, z: Complex64, eps: f64) -> Result<Complex64> {
    Ok(SecularSystem::assemble_z(graph, z, eps, None)?.determinant())
}

/// Zeros of h(μ, ε) inside the window, with multiplicities.
pub fn eigenvalues_in_disk(
    graph: &MetricGraph,
    window: SpectralWindow,
    eps: f64,
    opts: &EigenOptions,
) -> Result<Vec<Eigenvalue>> {
    if window.radius <= MU_MIN_CUTOFF {
        return Err(Error::invalid("window radius inside the branch-point cutoff"));
    }
    let method = opts.method.unwrap_or(if eps == 0.0 && graph.is_compact() {
        EigenMethod::RealScan
    } else {
        EigenMethod::Contour
    });
    match method {
        EigenMethod::RealScan => real_scan(graph, window, opts),
        EigenMethod::Contour => contour_search(graph, window, eps, opts),
    }
}

fn in_window(window: &SpectralWindow, mu: Complex64) -> bool {
    mu.norm() >= MU_MIN_CUTOFF && (mu - window.center).norm() < window.radius
}

fn contour_search(
    graph: &MetricGraph,
    window: SpectralWindow,
    eps: f64,
    opts: &EigenOptions,
) -> Result<Vec<Eigenvalue>> {
    let r0 = (window.center.norm() + window.radius).sqrt();
    let f = |z: Complex64| secular_z(graph, z, eps);
    let polish = |anchor: Complex64| {
        let sys = SecularSystem::assemble_z(graph, anchor, eps, None)?;
        let scales = sys.scales().to_vec();
        Ok(move |z: Complex64| {
            Ok(SecularSystem::assemble_z(graph, z, eps, Some(&scales))?.determinant())
        })
    };
    let mut last = None;
    for attempt in 0..=opts.retries {
        let grow = 1.0 + 0.02 + 0.0173 * attempt as f64;
        let r = r0 * grow;
        let eta = window.strip * r0 * (1.0 + 0.11 * attempt as f64);
        let rect = Rect::new(-r - 0.0071 * r0, r + 0.0093 * r0, -eta, r + 0.0117 * r0);
        match find_zeros(&f, &polish, rect, &opts.roots) {
            Ok(zs) => return Ok(collect(window, zs.iter().map(|z| (z.z, z.multiplicity)))),
            Err(e @ Error::ContourHit(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::ContourHit("retry budget exhausted".into())))
}

/// Maps √μ-plane zeros to μ, keeps the physical sheet, merges ±√μ pairs.
fn collect(window: SpectralWindow, zs: impl Iterator<Item = (Complex64, usize)>) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = Vec::new();
    for (z, m) in zs {
        if z.im < -1e-9 * z.norm().max(1.0) {
            continue;
        }
        let mu = z * z;
        if !in_window(&window, mu) {
            continue;
        }
        if let Some(e) = out
            .iter_mut()
            .find(|e| (e.mu - mu).norm() <= 1e-7 * mu.norm().max(1.0))
        {
            e.multiplicity = e.multiplicity.max(m);
        } else {
            out.push(Eigenvalue {
                mu,
                multiplicity: m,
            });
        }
    }
    out.sort_by(|a, b| a.mu.re.total_cmp(&b.mu.re).then(a.mu.im.total_cmp(&b.mu.im)));
    out
}

/// Real secular matrix in the basis cos(zt), sin(zt) on each edge (z > 0).
fn real_matrix(graph: &MetricGraph, z: f64) -> Result<RMat> {
    let n = 2 * graph.edges().len();
    let mut m = RMat::zeros(n, n);
    let mut r0 = 0;
    for v in graph.vertices() {
        let cond = v
            .condition
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("vertex {} has no gluing condition", v.id)))?;
        let d = v.degree();
        let (rows, _) = rows_at_z(cond, d, c(z, 0.0), 0.0, None)?;
        if rows.val.iter().chain(rows.der.iter()).any(|x| x.im != 0.0) {
            return Err(Error::invalid("real scan needs real condition rows"));
        }
        for (k, ee) in v.adjacency.iter().enumerate() {
            let l = graph.edge(ee.edge).length.value().expect("compact graph");
            let o = 2 * ee.edge;
            let (va, vb, da, db) = match ee.end {
                End::Start => (1.0, 0.0, 0.0, z),
                End::Finish => {
                    let (s, co) = (z * l).sin_cos();
                    (co, s, z * s, -z * co)
                }
            };
            for r in 0..d {
                let a = rows.val[(r, k)].re;
                let b = rows.der[(r, k)].re;
                m[(r0 + r, o)] += a * va + b * da;
                m[(r0 + r, o + 1)] += a * vb + b * db;
            }
        }
        r0 += d;
    }
    Ok(m)
}

fn row_scaled_det(m: &RMat) -> f64 {
    let mut m = m.clone();
    for r in 0..m.nrows() {
        let nr = m.row(r).norm();
        if nr > 0.0 {
            m.row_mut(r).scale_mut(1.0 / nr);
        }
    }
    m.determinant()
}

fn sv_ratio(m: &RMat) -> (f64, Vec<f64>) {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let smax = s[0].max(f64::MIN_POSITIVE);
    let rel: Vec<f64> = s.iter().map(|x| x / smax).collect();
    (*rel.last().unwrap(), rel)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a) <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
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

/// Sign changes and |det| minima on a z-grid, refined by minimizing the
/// smallest singular value; multiplicity from the null-space dimension.
fn real_scan(
    graph: &MetricGraph,
    window: SpectralWindow,
    opts: &EigenOptions,
) -> Result<Vec<Eigenvalue>> {
    if window.center.im != 0.0 {
        return Err(Error::invalid("real scan needs a real window centre"));
    }
    let lo = (window.center.re - window.radius).max(MU_MIN_CUTOFF).sqrt();
    let hi_mu = window.center.re + window.radius;
    if hi_mu <= MU_MIN_CUTOFF {
        return Ok(Vec::new());
    }
    let hi = hi_mu.sqrt();
    let lmax = graph
        .edges()
        .iter()
        .filter_map(|e| e.length.value())
        .fold(0.0, f64::max);
    let n = 2000 + (400.0 * hi * lmax.max(1.0) * graph.edges().len() as f64) as usize;
    let zs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let dets: Vec<f64> = zs
        .iter()
        .map(|&z| real_matrix(graph, z).map(|m| row_scaled_det(&m)))
        .collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    for k in 1..=n {
        if dets[k - 1] == 0.0 {
            brackets.push((zs[k - 1.max(1)].min(zs[k - 1]), zs[k]));
        }
        if dets[k - 1].signum() != dets[k].signum() {
            brackets.push((zs[k - 1], zs[k]));
        } else if k < n
            && dets[k].abs() < dets[k - 1].abs()
            && dets[k].abs() <= dets[k + 1].abs()
        {
            brackets.push((zs[k - 1], zs[k + 1]));
        }
    }
    let ratio = |z: f64| {
        real_matrix(graph, z)
            .map(|m| sv_ratio(&m).0)
            .unwrap_or(f64::INFINITY)
    };
    let mut found: Vec<(f64, usize)> = Vec::new();
    for (a, b) in brackets {
        let z = golden_min(&ratio, a, b);
        let m = real_matrix(graph, z)?;
        let (smin, rel) = sv_ratio(&m);
        if smin > 1e-8 {
            continue;
        }
        let mult = rel.iter().filter(|&&x| x < opts.null_tol).count().max(1);
        if let Some(f) = found.iter_mut().find(|f| (f.0 - z).abs() < 1e-8 * z.max(1.0)) {
            f.1 = f.1.max(mult);
        } else {
            found.push((z, mult));
        }
    }
    Ok(collect(
        window,
        found.into_iter().map(|(z, m)| (c(z, 0.0), m)),
    ))
}
