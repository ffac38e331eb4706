use super::modes::{discrete_modes, CrossSectionProblem, Mode};
use super::{Direction, JunctionDomain2D, WallBc};
use crate::conditions::{threshold_projection, ProjectionPair, SNAP_TOL_FD};
use crate::error::{Error, Result};
use crate::linalg::{c, polyfit, unitary_symmetric_defects, CMat, I};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

const RESIDUAL_GUARD: f64 = 1e-6;

type Node = (i64, i64);

/// Truncation face of one channel: kept node indices in transverse order
/// (`None` where a Dirichlet wall removed the node).
struct Face {
    nodes: Vec<Option<usize>>,
    length: f64,
}

/// Lumped five-point discretization of −Δ on the domain, without the
/// face coupling.
struct Grid {
    w: usize,
    coords: Vec<Node>,
    mass: Vec<f64>,
    stiffness: Vec<(usize, usize, f64)>,
    faces: Vec<Face>,
    h: f64,
    /// Lumped mass of the unit cross-section, per transverse node.
    face_mass: Vec<f64>,
}

fn to_grid(x: f64, h: f64, what: &str) -> Result<i64> {
    let q = x / h;
    let r = q.round();
    if (q - r).abs() > 1e-6 {
        return Err(Error::invalid(format!("{what} = {x} is not a multiple of h = {h}")));
    }
    Ok(r as i64)
}

impl Grid {
    fn build(d: &JunctionDomain2D, h: f64) -> Result<Grid> {
        d.validate()?;
        let w = to_grid(1.0, h, "channel width")?;
        if w < 8 {
            return Err(Error::invalid(format!("grid step {h} under-resolves the unit channel")));
        }
        let r = &d.junction;
        let (x0, x1) = (to_grid(r.x0, h, "x0")?, to_grid(r.x1, h, "x1")?);
        let (y0, y1) = (to_grid(r.y0, h, "y0")?, to_grid(r.y1, h, "y1")?);
        let mut cells: BTreeSet<Node> = BTreeSet::new();
        let mut add_rect = |ia: i64, ib: i64, ja: i64, jb: i64| {
            for i in ia..ib {
                for j in ja..jb {
                    cells.insert((i, j));
                }
            }
        };
        add_rect(x0, x1, y0, y1);
        // Per face: transverse node coordinates, k = 0..=w.
        let mut face_lines: Vec<Vec<Node>> = Vec::new();
        for (n, ch) in d.channels.iter().enumerate() {
            let off = to_grid(ch.offset, h, &format!("channel {n} offset"))?;
            let len = to_grid(ch.length, h, &format!("channel {n} length"))?;
            let line: Vec<Node> = match ch.direction {
                Direction::East => {
                    add_rect(x1, x1 + len, y0 + off, y0 + off + w);
                    (0..=w).map(|k| (x1 + len, y0 + off + k)).collect()
                }
                Direction::West => {
                    add_rect(x0 - len, x0, y0 + off, y0 + off + w);
                    (0..=w).map(|k| (x0 - len, y0 + off + k)).collect()
                }
                Direction::North => {
                    add_rect(x0 + off, x0 + off + w, y1, y1 + len);
                    (0..=w).map(|k| (x0 + off + k, y1 + len)).collect()
                }
                Direction::South => {
                    add_rect(x0 + off, x0 + off + w, y0 - len, y0);
                    (0..=w).map(|k| (x0 + off + k, y0 - len)).collect()
                }
            };
            face_lines.push(line);
        }
        let face_interior: BTreeSet<Node> = face_lines
            .iter()
            .flat_map(|l| l[1..l.len() - 1].iter().copied())
            .collect();
        let face_edges: BTreeSet<(Node, Node)> = face_lines
            .iter()
            .flat_map(|l| l.windows(2).map(|p| (p[0], p[1])))
            .collect();
        let mut all_nodes: BTreeSet<Node> = BTreeSet::new();
        for &(i, j) in &cells {
            for n in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                all_nodes.insert(n);
            }
        }
        let adjacent = |(i, j): Node| {
            [(i, j), (i - 1, j), (i, j - 1), (i - 1, j - 1)]
                .iter()
                .filter(|c| cells.contains(c))
                .count()
        };
        let drop_walls = d.wall.drops_boundary();
        let mut index: BTreeMap<Node, usize> = BTreeMap::new();
        let mut coords = Vec::new();
        for &n in &all_nodes {
            let wall = adjacent(n) < 4 && !face_interior.contains(&n);
            if drop_walls && wall {
                continue;
            }
            index.insert(n, coords.len());
            coords.push(n);
        }
        let nn = coords.len();
        let mut mass = vec![0.0; nn];
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(9 * nn);
        let link = |a: Node, b: Node, wgt: f64, entries: &mut Vec<(usize, usize, f64)>| {
            let ia = index.get(&a).copied();
            let ib = index.get(&b).copied();
            if let Some(p) = ia {
                entries.push((p, p, wgt));
            }
            if let Some(q) = ib {
                entries.push((q, q, wgt));
            }
            if let (Some(p), Some(q)) = (ia, ib) {
                entries.push((p, q, -wgt));
                entries.push((q, p, -wgt));
            }
        };
        let alpha = match d.wall {
            WallBc::Robin { alpha } => Some(alpha),
            _ => None,
        };
        for &(i, j) in &cells {
            let c00 = (i, j);
            let c10 = (i + 1, j);
            let c01 = (i, j + 1);
            let c11 = (i + 1, j + 1);
            for n in [c00, c10, c01, c11] {
                if let Some(&p) = index.get(&n) {
                    mass[p] += 0.25 * h * h;
                }
            }
            let sides = [
                (c00, c10, (i, j - 1)),
                (c01, c11, (i, j + 1)),
                (c00, c01, (i - 1, j)),
                (c10, c11, (i + 1, j)),
            ];
            for (a, b, across) in sides {
                link(a, b, 0.5, &mut entries);
                if let Some(al) = alpha {
                    if !cells.contains(&across) && !face_edges.contains(&(a, b)) {
                        for n in [a, b] {
                            if let Some(&p) = index.get(&n) {
                                entries.push((p, p, 0.5 * al * h));
                            }
                        }
                    }
                }
            }
        }
        entries.sort_unstable_by_key(|e| (e.1, e.0));
        let mut stiffness: Vec<(usize, usize, f64)> = Vec::with_capacity(5 * nn);
        for e in entries {
            match stiffness.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => stiffness.push(e),
            }
        }
        let faces = face_lines
            .iter()
            .zip(&d.channels)
            .map(|(l, ch)| Face {
                nodes: l.iter().map(|n| index.get(n).copied()).collect(),
                length: ch.length,
            })
            .collect();
        let w = w as usize;
        let mut face_mass = vec![h; w + 1];
        face_mass[0] = 0.5 * h;
        face_mass[w] = 0.5 * h;
        Ok(Grid {
            w,
            coords,
            mass,
            stiffness,
            faces,
            h,
            face_mass,
        })
    }

    fn unknowns(&self) -> usize {
        self.coords.len()
    }
}

/// Factored system at one λ.
struct Solved {
    /// Columns: incident channel p.
    x: Vec<Vec<Complex64>>,
    residual: f64,
    k0: Complex64,
}

/// Outgoing wavenumber of the three-point longitudinal scheme:
/// 2(1 − cos kh)/h² = κ² with Im k ≥ 0, and Re k > 0 on the propagating branch.
fn discrete_wavenumber(kappa2: f64, h: f64) -> Complex64 {
    let z = c(1.0 - 0.5 * h * h * kappa2, 0.0);
    let r = (z * z - 1.0).sqrt();
    let (w1, w2) = (z + r, z - r);
    let w = if (w1.norm() - w2.norm()).abs() > 1e-14 {
        if w1.norm() < w2.norm() { w1 } else { w2 }
    } else if w1.im > 0.0 {
        w1
    } else {
        w2
    };
    -I * w.ln() / h
}

fn solve_at(
    g: &Grid,
    modes: &[Mode],
    lambda: f64,
    incident: &[usize],
) -> Result<Solved> {
    let n = g.unknowns();
    let ks: Vec<Complex64> = modes.iter().map(|m| discrete_wavenumber(lambda - m.lambda, g.h)).collect();
    let dtn: Vec<Complex64> = ks.iter().map(|k| I * (k * g.h).sin() / g.h).collect();
    let mut trip: Vec<(usize, usize, Complex64)> = g
        .stiffness
        .iter()
        .map(|&(i, j, v)| {
            let m = if i == j { lambda * g.mass[i] } else { 0.0 };
            (i, j, c(v - m, 0.0))
        })
        .collect();
    // Outgoing modal Dirichlet-to-Neumann map on each face.
    let wphi: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| m.phi.iter().zip(&g.face_mass).map(|(p, w)| p * w).collect())
        .collect();
    for f in &g.faces {
        for (a, na) in f.nodes.iter().enumerate() {
            let Some(ia) = na else { continue };
            for (b, nb) in f.nodes.iter().enumerate() {
                let Some(ib) = nb else { continue };
                let mut s = c(0.0, 0.0);
                for (q, t) in dtn.iter().enumerate() {
                    s += t * (wphi[q][a] * wphi[q][b]);
                }
                trip.push((*ia, *ib, -s));
            }
        }
    }
    trip.sort_unstable_by_key(|e| (e.1, e.0));
    let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(trip.len());
    for e in trip {
        match merged.last_mut() {
            Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
            _ => merged.push(e),
        }
    }
    let triplets: Vec<Triplet<usize, usize, Complex64>> =
        merged.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    let a = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::numerical(format!("sparse assembly failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Resonance(format!("sparse LU failed at λ = {lambda}: {e:?}")))?;
    let k0 = ks[0];
    let rhs_of = |p: usize| {
        let f = &g.faces[p];
        let amp = -2.0 * dtn[0] * (-I * k0 * f.length).exp();
        let mut b = vec![c(0.0, 0.0); n];
        for (k, node) in f.nodes.iter().enumerate() {
            if let Some(i) = node {
                b[*i] += amp * wphi[0][k];
            }
        }
        b
    };
    let rhs_cols: Vec<Vec<Complex64>> = incident.iter().map(|&p| rhs_of(p)).collect();
    let rhs = faer::Mat::<Complex64>::from_fn(n, incident.len(), |i, j| rhs_cols[j][i]);
    let sol = lu.solve(&rhs);
    let x: Vec<Vec<Complex64>> = (0..incident.len())
        .map(|j| (0..n).map(|i| sol[(i, j)]).collect())
        .collect();
    let mut residual = 0.0f64;
    for (xc, bc) in x.iter().zip(&rhs_cols) {
        let mut r = bc.iter().map(|v| -v).collect::<Vec<_>>();
        for &(i, j, v) in &merged {
            r[i] += v * xc[j];
        }
        let rn = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let bn = bc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        residual = residual.max(rn / bn);
    }
    if !residual.is_finite() || residual > RESIDUAL_GUARD {
        return Err(Error::Resonance(format!(
            "solve residual {residual:.2e} at λ = {lambda}"
        )));
    }
    Ok(Solved { x, residual, k0 })
}

/// T and its diagnostics at one λ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionScattering {
    pub lambda: f64,
    /// Discrete λ₀ and λ₁ of the cross-section.
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(skip)]
    pub t: CMat,
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    pub residual: f64,
    pub unknowns: usize,
}

fn prepare(d: &JunctionDomain2D, h: f64, n_evanescent: usize) -> Result<(Grid, Vec<Mode>, f64)> {
    let g = Grid::build(d, h)?;
    let p = CrossSectionProblem::new(d.wall, g.w)?;
    let mut modes = discrete_modes(&p, (n_evanescent + 1).max(2));
    if modes.len() < 2 || modes.len() < n_evanescent + 1 {
        return Err(Error::invalid("cross-section grid has too few modes"));
    }
    let lambda1 = modes[1].lambda;
    modes.truncate(n_evanescent + 1);
    Ok((g, modes, lambda1))
}

fn read_off(g: &Grid, modes: &[Mode], s: &Solved, d: usize) -> CMat {
    let k0 = s.k0;
    CMat::from_fn(d, d, |p, j| {
        let f = &g.faces[j];
        let mut b = c(0.0, 0.0);
        for (k, node) in f.nodes.iter().enumerate() {
            if let Some(i) = node {
                b += s.x[p][*i] * (g.face_mass[k] * modes[0].phi[k]);
            }
        }
        let ph = (-I * k0 * f.length).exp();
        if p == j {
            (b - ph) * ph
        } else {
            b * ph
        }
    })
}

fn scatter_on(g: &Grid, modes: &[Mode], lambda1: f64, lambda: f64) -> Result<JunctionScattering> {
    let lambda0 = modes[0].lambda;
    if !(lambda > lambda0 && lambda < lambda1) {
        return Err(Error::invalid(format!(
            "λ = {lambda} outside the single-mode window ({lambda0:.6}, {lambda1:.6})"
        )));
    }
    let d = g.faces.len();
    let incident: Vec<usize> = (0..d).collect();
    let s = solve_at(g, modes, lambda, &incident)?;
    let t = read_off(g, modes, &s, d);
    let (u, sy) = unitary_symmetric_defects(&t);
    Ok(JunctionScattering {
        lambda,
        lambda0,
        lambda1,
        t,
        unitarity_defect: u,
        symmetry_defect: sy,
        residual: s.residual,
        unknowns: g.unknowns(),
    })
}

/// Numerical scattering matrix of the unit-width junction at λ ∈ (λ₀, λ₁).
/// One factorization serves all incident channels.
pub fn junction_scattering_fd(
    d: &JunctionDomain2D,
    lambda: f64,
    h: f64,
    n_evanescent: usize,
) -> Result<JunctionScattering> {
    let (g, modes, l1) = prepare(d, h, n_evanescent)?;
    scatter_on(&g, &modes, l1, lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
}

/// Total field for the wave incident from channel `p`.
pub fn junction_field(
    d: &JunctionDomain2D,
    lambda: f64,
    h: f64,
    n_evanescent: usize,
    p: usize,
) -> Result<Vec<FieldSample>> {
    if p >= d.degree() {
        return Err(Error::invalid(format!("channel {p} does not exist")));
    }
    let (g, modes, l1) = prepare(d, h, n_evanescent)?;
    if !(lambda > modes[0].lambda && lambda < l1) {
        return Err(Error::invalid(format!("λ = {lambda} outside the single-mode window")));
    }
    let s = solve_at(&g, &modes, lambda, &[p])?;
    Ok(g
        .coords
        .iter()
        .zip(&s.x[0])
        .map(|(&(i, j), u)| FieldSample {
            x: i as f64 * g.h,
            y: j as f64 * g.h,
            re: u.re,
            im: u.im,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    #[serde(skip)]
    pub result: Option<JunctionScattering>,
    /// Why the point was rejected, if it was.
    pub rejected: Option<String>,
}

/// Scatters at every λ. Points whose solve fails, or whose defects exceed
/// ten times the median over the sweep, are marked rejected.
pub fn junction_sweep(
    d: &JunctionDomain2D,
    lambdas: &[f64],
    h: f64,
    n_evanescent: usize,
) -> Result<Vec<SweepPoint>> {
    let (g, modes, l1) = prepare(d, h, n_evanescent)?;
    let mut pts: Vec<SweepPoint> = lambdas
        .par_iter()
        .map(|&lambda| match scatter_on(&g, &modes, l1, lambda) {
            Ok(r) => SweepPoint {
                lambda,
                result: Some(r),
                rejected: None,
            },
            Err(e) => SweepPoint {
                lambda,
                result: None,
                rejected: Some(e.to_string()),
            },
        })
        .collect();
    let mut defects: Vec<f64> = pts
        .iter()
        .filter_map(|p| p.result.as_ref())
        .map(|r| r.unitarity_defect.max(r.symmetry_defect))
        .collect();
    if defects.len() >= 3 {
        defects.sort_by(f64::total_cmp);
        let median = defects[defects.len() / 2];
        for p in &mut pts {
            if let Some(r) = &p.result {
                let dd = r.unitarity_defect.max(r.symmetry_defect);
                if dd > 10.0 * median && dd > 1e-12 {
                    p.rejected = Some(format!("defect {dd:.2e} exceeds 10× median {median:.2e}"));
                }
            }
        }
    }
    Ok(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdLimit {
    pub lambda0: f64,
    pub zs: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<CMat>,
    #[serde(skip)]
    pub t0: CMat,
    /// Largest entry change of T(λ₀) when the farthest sample is dropped.
    pub extrapolation_residual: f64,
    /// Largest fit residual at the samples.
    pub fit_residual: f64,
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    #[serde(skip)]
    pub projection: Option<ProjectionPair>,
    pub snap_error: Option<String>,
}

/// Extrapolates T(λ) to λ₀ with polynomials of degree `order` in
/// z = √(λ − λ₀); the samples sit at λ = λ₀ + z² with λ₀ the discrete
/// threshold of the grid. The result is snapped with the relaxed tolerance.
pub fn threshold_limit_t(
    d: &JunctionDomain2D,
    zs: &[f64],
    h: f64,
    order: usize,
    n_evanescent: usize,
) -> Result<ThresholdLimit> {
    if order == 0 || zs.len() < order + 2 {
        return Err(Error::invalid(format!(
            "need at least order + 2 = {} samples of z",
            order + 2
        )));
    }
    if zs.iter().any(|z| !(*z > 0.0)) {
        return Err(Error::invalid("z samples must be positive"));
    }
    let (g, modes, l1) = prepare(d, h, n_evanescent)?;
    let lambda0 = modes[0].lambda;
    let samples: Vec<CMat> = zs
        .par_iter()
        .map(|z| scatter_on(&g, &modes, l1, lambda0 + z * z).map(|r| r.t))
        .collect::<Result<_>>()?;
    let dim = d.degree();
    let far = zs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let extrapolate = |skip: Option<usize>| {
        let mut fit_res = 0.0f64;
        let t = CMat::from_fn(dim, dim, |i, j| {
            let (xs, ys): (Vec<f64>, Vec<Complex64>) = zs
                .iter()
                .zip(&samples)
                .enumerate()
                .filter(|(k, _)| Some(*k) != skip)
                .map(|(_, (z, m))| (*z, m[(i, j)]))
                .unzip();
            let (p, r) = polyfit(&xs, &ys, order);
            fit_res = fit_res.max(r);
            p.eval(c(0.0, 0.0))
        });
        (t, fit_res)
    };
    let (t0, fit_residual) = extrapolate(None);
    let (t_short, _) = extrapolate(Some(far));
    let extrapolation_residual = (&t0 - &t_short).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if !extrapolation_residual.is_finite() || extrapolation_residual > SNAP_TOL_FD {
        return Err(Error::Extrapolation {
            residual: extrapolation_residual,
        });
    }
    let (u, sy) = unitary_symmetric_defects(&t0);
    let (projection, snap_error) = match threshold_projection(&t0, SNAP_TOL_FD) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ThresholdLimit {
        lambda0,
        zs: zs.to_vec(),
        samples,
        t0,
        extrapolation_residual,
        fit_residual,
        unitarity_defect: u,
        symmetry_defect: sy,
        projection,
        snap_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lumped_mass_sums_to_area() {
        let d = JunctionDomain2D::cross(0.5, WallBc::Neumann);
        let g = Grid::build(&d, 1.0 / 16.0).unwrap();
        let area: f64 = g.mass.iter().sum();
        assert!((area - 3.0).abs() < 1e-12);
        let row_sum = g.stiffness.iter().map(|e| e.2).sum::<f64>();
        assert!(row_sum.abs() < 1e-12);
    }

    #[test]
    fn straight_channel_transmits() {
        let d = JunctionDomain2D::straight(2.0, WallBc::Dirichlet);
        let r = junction_scattering_fd(&d, 20.0, 1.0 / 32.0, 3).unwrap();
        assert!(r.t[(0, 0)].norm() < 1e-3, "{}", r.t);
        assert!((r.t[(0, 1)].norm() - 1.0).abs() < 1e-3);
    }
}
