//! Zeros of analytic functions in rectangles by the argument principle.
//!
//! The winding number of f along a rectangle boundary counts the zeros
//! inside. Rectangles are subdivided until each holds a single cluster,
//! whose centroid seeds a Newton polish.

use crate::error::{Error, Result};
use crate::linalg::c;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Axis-aligned rectangle [x0, x1] × [y0, y1] in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack
            && z.re <= self.x1 + slack
            && z.im >= self.y0 - slack
            && z.im <= self.y1 + slack
    }

    /// Boundary point at arc length s, counter-clockwise from (x0, y0).
    fn point(&self, s: f64) -> Complex64 {
        let (w, h) = (self.width(), self.height());
        if s < w {
            c(self.x0 + s, self.y0)
        } else if s < w + h {
            c(self.x1, self.y0 + (s - w))
        } else if s < 2.0 * w + h {
            c(self.x1 - (s - w - h), self.y1)
        } else {
            c(self.x0, self.y1 - (s - 2.0 * w - h))
        }
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.x0 + fx * self.width();
        let ym = self.y0 + fy * self.height();
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Boundary samples before adaptive doubling.
    pub initial_points: usize,
    pub max_points: usize,
    /// Largest argument increment accepted between neighbouring samples.
    pub max_arg_step: f64,
    /// Rectangles smaller than this report their zeros as one cluster.
    pub min_size: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_depth: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            initial_points: 256,
            max_points: 1 << 17,
            max_arg_step: PI / 4.0,
            min_size: 1e-9,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            max_depth: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub z: Complex64,
    pub multiplicity: usize,
}

struct Contour {
    winding: i64,
    mids: Vec<Complex64>,
    dlog: Vec<Complex64>,
}

/// Boundary integral data of f on `rect` with adaptive doubling.
fn contour<F>(f: &F, rect: &Rect, opts: &RootOptions) -> Result<Contour>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let p = rect.perimeter();
    let mut n = opts.initial_points;
    let mut vals: Vec<Complex64> = Vec::new();
    let mut prev_w: Option<i64> = None;
    loop {
        let step = p / n as f64;
        let mut next = Vec::with_capacity(n);
        for k in 0..n {
            if !vals.is_empty() && k % 2 == 0 {
                next.push(vals[k / 2]);
            } else {
                next.push(f(rect.point(k as f64 * step))?);
            }
        }
        vals = next;
        let scale = {
            let mut mags: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
            mags.sort_by(f64::total_cmp);
            mags[mags.len() / 2]
        };
        if !(scale > 0.0) || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::ContourHit("function vanishes or overflows on the contour".into()));
        }
        if vals.iter().any(|v| v.norm() < 1e-13 * scale) {
            return Err(Error::ContourHit(format!(
                "|f| below 1e-13 of its median on rectangle {rect:?}"
            )));
        }
        let mut total = 0.0;
        let mut worst = 0.0f64;
        let mut dlog = Vec::with_capacity(n);
        let mut mids = Vec::with_capacity(n);
        for k in 0..n {
            let a = vals[k];
            let b = vals[(k + 1) % n];
            let r = b / a;
            let d = c(r.norm().ln(), r.arg());
            worst = worst.max(d.im.abs());
            total += d.im;
            dlog.push(d);
            let za = rect.point(k as f64 * step);
            let zb = rect.point(((k + 1) % n) as f64 * step);
            mids.push((za + zb) * 0.5);
        }
        let w = (total / (2.0 * PI)).round() as i64;
        let settled = worst < opts.max_arg_step && prev_w == Some(w);
        if settled {
            return Ok(Contour {
                winding: w,
                mids,
                dlog,
            });
        }
        prev_w = if worst < opts.max_arg_step { Some(w) } else { None };
        if 2 * n > opts.max_points {
            return Err(Error::ContourHit(format!(
                "argument of f not resolved with {n} samples on {rect:?}"
            )));
        }
        n *= 2;
    }
}

/// Modified Newton iteration for a zero of multiplicity m.
pub fn newton<G>(g: &G, z0: Complex64, m: usize, opts: &RootOptions) -> Option<Complex64>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let mut z = z0;
    for _ in 0..opts.newton_max_iter {
        let fz = g(z).ok()?;
        if fz == c(0.0, 0.0) {
            return Some(z);
        }
        let h = 1e-6 * z.norm().max(1.0);
        let fp = (g(z + h).ok()? - g(z - h).ok()?) / (2.0 * h);
        if fp == c(0.0, 0.0) || !fp.is_finite() {
            return None;
        }
        let dz = fz / fp * m as f64;
        z -= dz;
        if !z.is_finite() {
            return None;
        }
        if dz.norm() <= opts.newton_tol * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// All zeros of f inside `rect`, with multiplicities.
///
/// `f` may carry any positive factor (it is only used for counting);
/// `polish(anchor)` must return an analytic version of f to polish near
/// `anchor`.
pub fn find_zeros<F, P, G>(f: &F, polish: &P, rect: Rect, opts: &RootOptions) -> Result<Vec<Zero>>
where
    F: Fn(Complex64) -> Result<Complex64>,
    P: Fn(Complex64) -> Result<G>,
    G: Fn(Complex64) -> Result<Complex64>,
{
    let top = contour(f, &rect, opts)?;
    if top.winding < 0 {
        return Err(Error::numerical(format!(
            "negative winding {} (poles inside the region)",
            top.winding
        )));
    }
    let mut out = Vec::new();
    search(f, polish, rect, top, 0, opts, &mut out)?;
    out.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(out)
}

fn search<F, P, G>(
    f: &F,
    polish: &P,
    rect: Rect,
    data: Contour,
    depth: usize,
    opts: &RootOptions,
    out: &mut Vec<Zero>,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
    P: Fn(Complex64) -> Result<G>,
    G: Fn(Complex64) -> Result<Complex64>,
{
    let w = data.winding;
    if w <= 0 {
        return Ok(());
    }
    let norm = c(0.0, 2.0 * PI * w as f64);
    let centroid = data
        .mids
        .iter()
        .zip(&data.dlog)
        .map(|(z, d)| z * d)
        .sum::<Complex64>()
        / norm;
    let spread = data
        .mids
        .iter()
        .zip(&data.dlog)
        .map(|(z, d)| (z - centroid) * (z - centroid) * d)
        .sum::<Complex64>()
        / norm;
    let size = rect.diameter();
    let m = w as usize;
    let clustered = w == 1 || spread.norm().sqrt() < 1e-4 * size;
    if clustered || size < opts.min_size || depth >= opts.max_depth {
        let anchor = if rect.contains(centroid, 0.0) {
            centroid
        } else {
            c(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1))
        };
        let g = polish(anchor)?;
        if let Some(z) = newton(&g, anchor, m, opts) {
            if rect.contains(z, 1e-9 * size.max(1e-300)) {
                out.push(Zero { z, multiplicity: m });
                return Ok(());
            }
        }
        if size < opts.min_size || depth >= opts.max_depth {
            out.push(Zero {
                z: anchor,
                multiplicity: m,
            });
            return Ok(());
        }
    }
    const SPLITS: [(f64, f64); 5] = [
        (0.5137, 0.4861),
        (0.4719, 0.5293),
        (0.5531, 0.4477),
        (0.4391, 0.5619),
        (0.5903, 0.4129),
    ];
    for &(fx, fy) in SPLITS.iter() {
        let kids = rect.split(fx, fy);
        let mut datas = Vec::with_capacity(4);
        let mut ok = true;
        for k in &kids {
            match contour(f, k, opts) {
                Ok(d) => datas.push(d),
                Err(Error::ContourHit(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok || datas.iter().map(|d| d.winding).sum::<i64>() != w {
            continue;
        }
        for (k, d) in kids.into_iter().zip(datas) {
            search(f, polish, k, d, depth + 1, opts, out)?;
        }
        return Ok(());
    }
    Err(Error::ContourHit(format!(
        "could not subdivide {rect:?} without crossing a zero"
    )))
}
