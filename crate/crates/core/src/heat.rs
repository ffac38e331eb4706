//! Limit heat problem ∂w/∂τ = ∂²w/∂t² on a compact graph with continuity and
//! weighted flux balance Σρ_j ∂w/∂t_j = 0 at interior vertices.
//!
//! Space is discretized by lumped finite volumes on uniform per-edge grids:
//! a vertex node owns half a cell of every adjacent edge, weighted by ρ.
//! The weighted mass Σ_j ρ_j ∫ w dt is then exactly the diagonal mass
//! functional and Crank–Nicolson conserves it to rounding. Each step is a
//! Schur-complement solve onto the vertex and end nodes.

use crate::conditions::VertexCondition;
use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, VertexKind};
use crate::linalg::{linear_fit, tridiag_solve, RMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatConfig {
    pub dtau: f64,
    pub h: f64,
    pub tau_end: f64,
    /// Keep every k-th step in the trajectory (the final state is always kept).
    pub record_every: usize,
}

impl HeatConfig {
    pub fn new(dtau: f64, h: f64, tau_end: f64) -> Self {
        HeatConfig {
            dtau,
            h,
            tau_end,
            record_every: 1,
        }
    }
}

/// Per-edge uniform grid: n nodes including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGrid {
    pub length: f64,
    pub nodes: usize,
}

impl EdgeGrid {
    pub fn step(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        self.length * k as f64 / (self.nodes - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub tau: f64,
    /// Nodal values per edge, endpoints included.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTrajectory {
    pub grids: Vec<EdgeGrid>,
    /// ρ carried by each edge.
    pub edge_weights: Vec<f64>,
    pub states: Vec<HeatState>,
}

impl HeatTrajectory {
    pub fn last(&self) -> &HeatState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn mass(&self, state: &HeatState) -> f64 {
        weighted_mass(&self.grids, state, &self.edge_weights)
    }
}

/// Σ_j ρ_j ∫ w dt by the composite trapezoid rule.
pub fn weighted_mass(grids: &[EdgeGrid], state: &HeatState, rho: &[f64]) -> f64 {
    grids
        .iter()
        .zip(&state.values)
        .zip(rho)
        .map(|((g, w), r)| {
            let h = g.step();
            let n = w.len();
            let inner: f64 = w[1..n - 1].iter().sum();
            r * h * (inner + 0.5 * (w[0] + w[n - 1]))
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeRef {
    Junction(usize),
    Fixed,
}

struct Layout {
    grids: Vec<EdgeGrid>,
    rho: Vec<f64>,
    ends: Vec<[NodeRef; 2]>,
    junction_mass: Vec<f64>,
}

fn edge_weight_at(v: &crate::graph::Vertex, edge: usize, end: End) -> Result<Option<f64>> {
    let k = v
        .adjacency
        .iter()
        .position(|ee| ee.edge == edge && ee.end == end)
        .expect("adjacency is consistent");
    match &v.condition {
        Some(VertexCondition::Kirchhoff) => Ok(Some(1.0)),
        Some(VertexCondition::GeneralizedKirchhoff { rho }) => Ok(Some(rho[k])),
        Some(VertexCondition::Neumann) | Some(VertexCondition::Dirichlet)
            if v.kind == VertexKind::V1 =>
        {
            Ok(None)
        }
        Some(other) => Err(Error::invalid(format!(
            "heat problem needs Kirchhoff-type interior vertices, vertex {} has {}",
            v.id,
            other.name()
        ))),
        None => Err(Error::invalid(format!("vertex {} has no condition", v.id))),
    }
}

fn layout(graph: &MetricGraph, h: f64) -> Result<Layout> {
    if !graph.is_compact() {
        return Err(Error::invalid("heat problem needs a compact graph"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    let mut junction_of = vec![None; graph.vertices().len()];
    let mut nj = 0;
    for (i, v) in graph.vertices().iter().enumerate() {
        let fixed = matches!(v.condition, Some(VertexCondition::Dirichlet));
        if !fixed {
            junction_of[i] = Some(nj);
            nj += 1;
        }
    }
    let mut grids = Vec::new();
    let mut rho = Vec::new();
    let mut ends = Vec::new();
    let mut junction_mass = vec![0.0; nj];
    for (k, e) in graph.edges().iter().enumerate() {
        let l = e.length.value().unwrap();
        let n = ((l / h).round() as usize).max(2) + 1;
        let g = EdgeGrid { length: l, nodes: n };
        let fin = e.finish.unwrap();
        let ws = [
            edge_weight_at(graph.vertex(e.start), k, End::Start)?,
            edge_weight_at(graph.vertex(fin), k, End::Finish)?,
        ];
        let r = match ws {
            [Some(a), Some(b)] if (a - b).abs() > 1e-12 * a.max(b) => {
                return Err(Error::invalid(format!(
                    "edge {k} gets weights {a} and {b} from its two vertices"
                )))
            }
            [Some(a), _] | [None, Some(a)] => a,
            [None, None] => 1.0,
        };
        let node = |vi: usize| match junction_of[vi] {
            Some(j) => NodeRef::Junction(j),
            None => NodeRef::Fixed,
        };
        let pair = [node(e.start), node(fin)];
        for nr in pair {
            if let NodeRef::Junction(j) = nr {
                junction_mass[j] += 0.5 * r * g.step();
            }
        }
        grids.push(g);
        rho.push(r);
        ends.push(pair);
    }
    Ok(Layout {
        grids,
        rho,
        ends,
        junction_mass,
    })
}

/// Factored (M + θK) for the lumped system, eliminated onto junction nodes.
struct Factor {
    /// Per edge: tridiagonal of the interior block.
    blocks: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    /// Per edge: interior responses to a unit value at each end node.
    resp: Vec<[Vec<f64>; 2]>,
    schur: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

fn factor(lay: &Layout, theta: f64) -> Result<Factor> {
    let nj = lay.junction_mass.len();
    let mut s = RMat::zeros(nj, nj);
    for j in 0..nj {
        s[(j, j)] = lay.junction_mass[j];
    }
    let mut blocks = Vec::new();
    let mut resp = Vec::new();
    for (k, g) in lay.grids.iter().enumerate() {
        let h = g.step();
        let r = lay.rho[k];
        let m = g.nodes - 2;
        let kc = theta * r / h;
        let diag = vec![r * h + 2.0 * kc; m];
        let off = vec![-kc; m];
        let mut e0 = vec![0.0; m];
        let mut e1 = vec![0.0; m];
        e0[0] = kc;
        e1[m - 1] = kc;
        let y0 = tridiag_solve(&off, &diag, &off, &e0);
        let y1 = tridiag_solve(&off, &diag, &off, &e1);
        let ys = [&y0, &y1];
        for a in 0..2 {
            if let NodeRef::Junction(ja) = lay.ends[k][a] {
                s[(ja, ja)] += kc;
                // Coupling of end node a to its neighbouring interior node.
                let ia = if a == 0 { 0 } else { m - 1 };
                for b in 0..2 {
                    if let NodeRef::Junction(jb) = lay.ends[k][b] {
                        s[(ja, jb)] -= kc * ys[b][ia];
                    }
                }
            }
        }
        blocks.push((off.clone(), diag, off));
        resp.push([y0, y1]);
    }
    Ok(Factor {
        blocks,
        resp,
        schur: s.lu(),
    })
}

/// y ← K·w for the weighted stiffness (interior and junction parts).
fn apply_k(lay: &Layout, w_in: &[Vec<f64>], w_j: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut yj = vec![0.0; w_j.len()];
    let mut yi = Vec::with_capacity(lay.grids.len());
    for (k, g) in lay.grids.iter().enumerate() {
        let c = lay.rho[k] / g.step();
        let x = &w_in[k];
        let m = x.len();
        let endv = |a: usize| match lay.ends[k][a] {
            NodeRef::Junction(j) => w_j[j],
            NodeRef::Fixed => 0.0,
        };
        let (l, r) = (endv(0), endv(1));
        let mut y = vec![0.0; m];
        for i in 0..m {
            let left = if i == 0 { l } else { x[i - 1] };
            let right = if i + 1 == m { r } else { x[i + 1] };
            y[i] = c * (2.0 * x[i] - left - right);
        }
        for (a, nb, own) in [(0usize, x[0], l), (1, x[m - 1], r)] {
            if let NodeRef::Junction(j) = lay.ends[k][a] {
                yj[j] += c * (own - nb);
            }
        }
        yi.push(y);
    }
    (yi, yj)
}

fn solve_step(lay: &Layout, f: &Factor, bi: &[Vec<f64>], bj: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut zs = Vec::with_capacity(bi.len());
    let mut rhs = nalgebra::DVector::from_column_slice(bj);
    for (k, b) in bi.iter().enumerate() {
        let (sub, diag, sup) = &f.blocks[k];
        let z = tridiag_solve(sub, diag, sup, b);
        let m = z.len();
        let kc = -sub[0];
        if let NodeRef::Junction(j) = lay.ends[k][0] {
            rhs[j] += kc * z[0];
        }
        if let NodeRef::Junction(j) = lay.ends[k][1] {
            rhs[j] += kc * z[m - 1];
        }
        zs.push(z);
    }
    let xj = if rhs.is_empty() {
        rhs
    } else {
        f.schur
            .solve(&rhs)
            .ok_or_else(|| Error::numerical("singular heat system"))?
    };
    for (k, z) in zs.iter_mut().enumerate() {
        for a in 0..2 {
            if let NodeRef::Junction(j) = lay.ends[k][a] {
                for (zi, yi) in z.iter_mut().zip(&f.resp[k][a]) {
                    *zi += yi * xj[j];
                }
            }
        }
    }
    Ok((zs, xj.iter().copied().collect()))
}

fn to_state(lay: &Layout, tau: f64, wi: &[Vec<f64>], wj: &[f64]) -> HeatState {
    let values = lay
        .grids
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let endv = |a: usize| match lay.ends[k][a] {
                NodeRef::Junction(j) => wj[j],
                NodeRef::Fixed => 0.0,
            };
            let mut v = Vec::with_capacity(wi[k].len() + 2);
            v.push(endv(0));
            v.extend_from_slice(&wi[k]);
            v.push(endv(1));
            v
        })
        .collect();
    HeatState { tau, values }
}

/// Crank–Nicolson trajectory from `w0(edge, t)`. Vertex values of w0 are
/// taken as the mean over the adjacent edge-ends.
pub fn heat_solve(
    graph: &MetricGraph,
    w0: impl Fn(usize, f64) -> f64,
    cfg: &HeatConfig,
) -> Result<HeatTrajectory> {
    if !(cfg.dtau > 0.0) || !(cfg.tau_end >= 0.0) {
        return Err(Error::invalid("dτ must be positive and τ_end non-negative"));
    }
    let lay = layout(graph, cfg.h)?;
    let nj = lay.junction_mass.len();
    let mut wj = vec![0.0; nj];
    let mut cnt = vec![0usize; nj];
    let mut wi: Vec<Vec<f64>> = Vec::with_capacity(lay.grids.len());
    for (k, g) in lay.grids.iter().enumerate() {
        wi.push((1..g.nodes - 1).map(|i| w0(k, g.t(i))).collect());
        for (a, t) in [(0usize, 0.0), (1, g.length)] {
            if let NodeRef::Junction(j) = lay.ends[k][a] {
                wj[j] += w0(k, t);
                cnt[j] += 1;
            }
        }
    }
    for j in 0..nj {
        wj[j] /= cnt[j] as f64;
    }
    let theta = 0.5 * cfg.dtau;
    let fac = factor(&lay, theta)?;
    let steps = (cfg.tau_end / cfg.dtau).round() as usize;
    let every = cfg.record_every.max(1);
    let mut states = vec![to_state(&lay, 0.0, &wi, &wj)];
    for s in 1..=steps {
        let (ki, kj) = apply_k(&lay, &wi, &wj);
        let bi: Vec<Vec<f64>> = wi
            .iter()
            .zip(&ki)
            .enumerate()
            .map(|(k, (w, kw))| {
                let m = lay.rho[k] * lay.grids[k].step();
                w.iter().zip(kw).map(|(a, b)| m * a - theta * b).collect()
            })
            .collect();
        let bj: Vec<f64> = (0..nj)
            .map(|j| lay.junction_mass[j] * wj[j] - theta * kj[j])
            .collect();
        let (ni, nj2) = solve_step(&lay, &fac, &bi, &bj)?;
        wi = ni;
        wj = nj2;
        if s % every == 0 || s == steps {
            states.push(to_state(&lay, s as f64 * cfg.dtau, &wi, &wj));
        }
    }
    Ok(HeatTrajectory {
        grids: lay.grids,
        edge_weights: lay.rho,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// Set when ‖w − w_∞‖ is already at rounding level.
    pub low_signal: bool,
}

/// Slope of log‖w − w_∞‖ against τ over the final third of the trajectory,
/// with w_∞ the weighted mean for conservative problems (zero otherwise).
pub fn decay_rate(traj: &HeatTrajectory, conservative: bool) -> DecayFit {
    let total: f64 = traj
        .grids
        .iter()
        .zip(&traj.edge_weights)
        .map(|(g, r)| g.length * r)
        .sum();
    let winf = if conservative {
        traj.mass(&traj.states[0]) / total
    } else {
        0.0
    };
    let dev = |s: &HeatState| {
        s.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max((v - winf).abs()))
    };
    let scale = dev(&traj.states[0]).max(winf.abs()).max(f64::MIN_POSITIVE);
    let n = traj.states.len();
    let first = (2 * n) / 3;
    let pts: Vec<(f64, f64)> = traj.states[first.min(n.saturating_sub(2))..]
        .iter()
        .map(|s| (s.tau, dev(s)))
        .collect();
    let low_signal = pts.iter().any(|&(_, d)| d <= 1e-11 * scale) || pts.len() < 2;
    if low_signal {
        return DecayFit {
            rate: 0.0,
            residual: 0.0,
            low_signal: true,
        };
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, _, rms) = linear_fit(&x, &y);
    DecayFit {
        rate: -slope,
        residual: rms,
        low_signal: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{interval, star_graph, EdgeLength};

    #[test]
    fn constant_is_steady() {
        let g = star_graph(3, &[EdgeLength::Finite(1.0); 3])
            .unwrap()
            .with_condition(0, VertexCondition::Kirchhoff)
            .unwrap()
            .with_end_conditions(VertexCondition::Neumann)
            .unwrap();
        let tr = heat_solve(&g, |_, _| 1.0, &HeatConfig::new(1e-2, 1e-2, 0.5)).unwrap();
        for v in tr.last().values.iter().flatten() {
            assert!((v - 1.0).abs() < 1e-13);
        }
        assert!((tr.mass(tr.last()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_sine_mode() {
        let g = interval(1.0, VertexCondition::Dirichlet, VertexCondition::Dirichlet).unwrap();
        let pi = std::f64::consts::PI;
        let tr = heat_solve(&g, |_, t| (pi * t).sin(), &HeatConfig::new(1e-4, 1e-3, 0.1)).unwrap();
        let gr = tr.grids[0];
        let exact = (-pi * pi * 0.1).exp();
        let err = tr.last().values[0]
            .iter()
            .enumerate()
            .map(|(i, v)| (v - exact * (pi * gr.t(i)).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }
}
