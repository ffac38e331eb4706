use super::green::EdgeCoefficients;
use super::secular::{assemble_secular, RESONANCE_FLOOR};
use crate::conditions::{flux_normalize, raw_star_scattering, VertexCondition};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{c, solve, sqrt_upper, CMat, I};
use num_complex::Complex64;

/// Amplitudes on one edge: ζ = incoming·e^{−izt} + outgoing·e^{izt}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAmplitudes {
    pub incoming: Complex64,
    pub outgoing: Complex64,
}

/// Solution for a unit wave arriving along infinite edge `incident`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphScatteringSolution {
    pub incident: usize,
    pub sqrt_mu: Complex64,
    pub amplitudes: Vec<EdgeAmplitudes>,
}

impl GraphScatteringSolution {
    pub fn eval(&self, edge: usize, t: f64) -> Complex64 {
        let iz = I * self.sqrt_mu;
        let a = self.amplitudes[edge];
        a.incoming * (-iz * t).exp() + a.outgoing * (iz * t).exp()
    }

    /// Outgoing amplitudes on the infinite edges, in edge-id order.
    pub fn row(&self, infinite: &[usize]) -> Vec<Complex64> {
        infinite.iter().map(|&j| self.amplitudes[j].outgoing).collect()
    }
}

/// Flux weight of each infinite edge: the weight of its vertex under a
/// weighted Kirchhoff condition, 1 otherwise.
fn infinite_edge_weights(graph: &MetricGraph, infinite: &[usize]) -> Vec<f64> {
    infinite
        .iter()
        .map(|&j| {
            let v = graph.vertex(graph.edge(j).start);
            match &v.condition {
                Some(VertexCondition::GeneralizedKirchhoff { rho }) => v
                    .adjacency
                    .iter()
                    .position(|ee| ee.edge == j)
                    .map(|k| rho[k])
                    .unwrap_or(1.0),
                _ => 1.0,
            }
        })
        .collect()
}

fn solve_all(
    graph: &MetricGraph,
    mu: Complex64,
    eps: f64,
    incident: &[usize],
) -> Result<Vec<GraphScatteringSolution>> {
    let infinite = graph.infinite_edges();
    if infinite.is_empty() {
        return Err(Error::invalid("graph has no infinite edges"));
    }
    for p in incident {
        if !infinite.contains(p) {
            return Err(Error::invalid(format!("edge {p} is not infinite")));
        }
    }
    let sys = assemble_secular(graph, mu, eps)?;
    sys.check_resonance(RESONANCE_FLOOR)?;
    let n = sys.layout.unknowns;
    let mut b = CMat::zeros(n, incident.len());
    for (col, &p) in incident.iter().enumerate() {
        let rhs = sys.incident_rhs(graph, p);
        for i in 0..n {
            b[(i, col)] = rhs[i];
        }
    }
    let x = solve(&sys.matrix, &b).ok_or_else(|| Error::Resonance("singular system".into()))?;
    let mut out = Vec::with_capacity(incident.len());
    for (col, &p) in incident.iter().enumerate() {
        let xs: Vec<Complex64> = x.column(col).iter().copied().collect();
        let co = EdgeCoefficients::from_solution(&sys, &xs);
        let amplitudes = (0..graph.edges().len())
            .map(|j| {
                if co.lengths[j].is_some() {
                    EdgeAmplitudes {
                        incoming: co.b(j),
                        outgoing: co.a[j],
                    }
                } else {
                    EdgeAmplitudes {
                        incoming: if j == p { c(1.0, 0.0) } else { c(0.0, 0.0) },
                        outgoing: co.a[j],
                    }
                }
            })
            .collect();
        out.push(GraphScatteringSolution {
            incident: p,
            sqrt_mu: sys.z,
            amplitudes,
        });
    }
    Ok(out)
}

pub fn scattering_solution(
    graph: &MetricGraph,
    mu: Complex64,
    eps: f64,
    incident: usize,
) -> Result<GraphScatteringSolution> {
    Ok(solve_all(graph, mu, eps, &[incident])?.remove(0))
}

/// Graph-level scattering matrix over the infinite edges (edge-id order),
/// flux-normalized.
pub fn scattering_matrix(graph: &MetricGraph, mu: Complex64, eps: f64) -> Result<CMat> {
    let infinite = graph.infinite_edges();
    let sols = solve_all(graph, mu, eps, &infinite)?;
    let m = infinite.len();
    let t = CMat::from_fn(m, m, |p, j| sols[p].amplitudes[infinite[j]].outgoing);
    Ok(flux_normalize(&t, &infinite_edge_weights(graph, &infinite)))
}

/// ψ_p = δ_pj e^{−izt} + t_pj e^{izt} on the star of a single vertex condition.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPsi {
    pub incident: usize,
    pub sqrt_mu: Complex64,
    pub row: Vec<Complex64>,
    pub residual: f64,
}

impl BasisPsi {
    pub fn eval(&self, edge: usize, t: f64) -> Complex64 {
        let iz = I * self.sqrt_mu;
        let inc = if edge == self.incident {
            (-iz * t).exp()
        } else {
            c(0.0, 0.0)
        };
        inc + self.row[edge] * (iz * t).exp()
    }
}

pub fn basis_psi(
    cond: &VertexCondition,
    d: usize,
    incident: usize,
    mu: Complex64,
    eps: f64,
) -> Result<BasisPsi> {
    if incident >= d {
        return Err(Error::invalid("incident edge out of range"));
    }
    let z = sqrt_upper(mu);
    let t = raw_star_scattering(cond, d, z, eps).map_err(|e| match e {
        Error::RankDeficient { .. } => Error::Resonance(format!("star system singular at μ = {mu}")),
        other => other,
    })?;
    let row: Vec<Complex64> = (0..d).map(|j| t[(incident, j)]).collect();
    let rows = crate::conditions::condition_rows(cond, d, mu, eps)?;
    let iz = I * z;
    let mut residual = 0.0f64;
    for r in 0..d {
        let mut s = c(0.0, 0.0);
        for j in 0..d {
            let delta = if j == incident { 1.0 } else { 0.0 };
            s += rows.val[(r, j)] * (row[j] + delta) + rows.der[(r, j)] * iz * (row[j] - delta);
        }
        residual = residual.max(s.norm());
    }
    if residual > 1e-10 {
        return Err(Error::Resonance(format!(
            "basis function misses the condition rows by {residual:.2e}"
        )));
    }
    Ok(BasisPsi {
        incident,
        sqrt_mu: z,
        row,
        residual,
    })
}
