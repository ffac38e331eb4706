use super::secular::{assemble_secular, SecularSystem, RESONANCE_FLOOR};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{c, solve, CMat, I};
use num_complex::Complex64;

/// A point on the graph: edge id and coordinate t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint {
    pub edge: usize,
    pub t: f64,
}

impl GraphPoint {
    pub fn new(edge: usize, t: f64) -> Self {
        GraphPoint { edge, t }
    }
}

/// Per-edge coefficients of e^{izt} and e^{iz(l−t)} (the latter zero on
/// infinite edges).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EdgeCoefficients {
    pub z: Complex64,
    pub lengths: Vec<Option<f64>>,
    pub a: Vec<Complex64>,
    pub bt: Vec<Complex64>,
}

impl EdgeCoefficients {
    pub fn from_solution(sys: &SecularSystem, x: &[Complex64]) -> Self {
        let lay = &sys.layout;
        let mut a = Vec::with_capacity(lay.offsets.len());
        let mut bt = Vec::with_capacity(lay.offsets.len());
        for (k, &o) in lay.offsets.iter().enumerate() {
            a.push(x[o]);
            bt.push(if lay.lengths[k].is_some() {
                x[o + 1]
            } else {
                c(0.0, 0.0)
            });
        }
        EdgeCoefficients {
            z: sys.z,
            lengths: lay.lengths.clone(),
            a,
            bt,
        }
    }

    pub fn value(&self, edge: usize, t: f64) -> Complex64 {
        let iz = I * self.z;
        let mut v = self.a[edge] * (iz * t).exp();
        if let Some(l) = self.lengths[edge] {
            v += self.bt[edge] * (iz * (l - t)).exp();
        }
        v
    }

    pub fn derivative(&self, edge: usize, t: f64) -> Complex64 {
        let iz = I * self.z;
        let mut v = iz * self.a[edge] * (iz * t).exp();
        if let Some(l) = self.lengths[edge] {
            v -= iz * self.bt[edge] * (iz * (l - t)).exp();
        }
        v
    }

    /// Coefficient of e^{−izt}: b = b̃·e^{izl}.
    pub fn b(&self, edge: usize) -> Complex64 {
        match self.lengths[edge] {
            Some(l) => self.bt[edge] * (I * self.z * l).exp(),
            None => c(0.0, 0.0),
        }
    }
}

/// G(·, γ₀) for the graph operator d²/dt² + μ.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction {
    pub source: GraphPoint,
    pub mu: Complex64,
    pub eps: f64,
    pub(crate) coeffs: EdgeCoefficients,
}

impl GreenFunction {
    pub fn sqrt_mu(&self) -> Complex64 {
        self.coeffs.z
    }

    fn free(&self, p: GraphPoint) -> Complex64 {
        if p.edge != self.source.edge {
            return c(0.0, 0.0);
        }
        let iz = I * self.coeffs.z;
        (iz * (p.t - self.source.t).abs()).exp() / (2.0 * iz)
    }

    pub fn eval(&self, p: GraphPoint) -> Complex64 {
        self.coeffs.value(p.edge, p.t) + self.free(p)
    }

    /// d/dt G at p; at the source the one-sided limit from the side given
    /// by the sign of `side`.
    pub fn derivative(&self, p: GraphPoint, side: f64) -> Complex64 {
        let mut d = self.coeffs.derivative(p.edge, p.t);
        if p.edge == self.source.edge {
            let iz = I * self.coeffs.z;
            let s = p.t - self.source.t;
            let sign = if s > 0.0 || (s == 0.0 && side > 0.0) {
                1.0
            } else {
                -1.0
            };
            d += sign * (iz * s.abs()).exp() * 0.5;
        }
        d
    }

    /// (a, b) with G = δ·free + a·e^{izt} + b·e^{−izt} on `edge`.
    pub fn coefficients(&self, edge: usize) -> (Complex64, Complex64) {
        (self.coeffs.a[edge], self.coeffs.b(edge))
    }
}

pub(crate) fn check_source(graph: &MetricGraph, p: GraphPoint) -> Result<()> {
    if p.edge >= graph.edges().len() {
        return Err(Error::invalid(format!("no edge {}", p.edge)));
    }
    let l = graph.edge(p.edge).length.value().unwrap_or(f64::INFINITY);
    if !(p.t > 0.0 && p.t < l) {
        return Err(Error::invalid(format!(
            "source t = {} is not strictly inside edge {} (a vertex or outside)",
            p.t, p.edge
        )));
    }
    Ok(())
}

pub fn green_function(
    graph: &MetricGraph,
    mu: Complex64,
    eps: f64,
    source: GraphPoint,
) -> Result<GreenFunction> {
    check_source(graph, source)?;
    let sys = assemble_secular(graph, mu, eps)?;
    sys.check_resonance(RESONANCE_FLOOR)?;
    let rhs = sys.point_source_rhs(graph, source.edge, source.t);
    let b = CMat::from_column_slice(rhs.len(), 1, &rhs);
    let x = solve(&sys.matrix, &b).ok_or_else(|| Error::Resonance("singular system".into()))?;
    Ok(GreenFunction {
        source,
        mu,
        eps,
        coeffs: EdgeCoefficients::from_solution(&sys, x.as_slice()),
    })
}
