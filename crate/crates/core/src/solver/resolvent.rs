use super::green::EdgeCoefficients;
use super::secular::{assemble_secular, RESONANCE_FLOOR};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{c, simpson_weights, solve, CMat, I};
use num_complex::Complex64;

/// A function on the graph given by uniform samples on each edge.
///
/// Edge j holds `samples[j]` at t_k = k·l_j/(n_j − 1). Infinite edges are
/// sampled on [0, cutoff_j] and vanish beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    pub samples: Vec<Vec<Complex64>>,
    /// Sampled length per edge (the edge length on finite edges).
    pub spans: Vec<f64>,
}

impl GraphFunction {
    pub fn zero(graph: &MetricGraph) -> Self {
        GraphFunction {
            samples: vec![Vec::new(); graph.edges().len()],
            spans: graph
                .edges()
                .iter()
                .map(|e| e.length.value().unwrap_or(0.0))
                .collect(),
        }
    }

    /// Samples `f(edge, t)` with `n` points per edge; infinite edges use `span`.
    pub fn from_fn(
        graph: &MetricGraph,
        n: usize,
        span: f64,
        f: impl Fn(usize, f64) -> Complex64,
    ) -> Self {
        let mut samples = Vec::with_capacity(graph.edges().len());
        let mut spans = Vec::with_capacity(graph.edges().len());
        for (j, e) in graph.edges().iter().enumerate() {
            let l = e.length.value().unwrap_or(span);
            samples.push(
                (0..n)
                    .map(|k| f(j, l * k as f64 / (n - 1) as f64))
                    .collect(),
            );
            spans.push(l);
        }
        GraphFunction { samples, spans }
    }

    pub fn grid(&self, edge: usize) -> Vec<f64> {
        let n = self.samples[edge].len();
        (0..n)
            .map(|k| self.spans[edge] * k as f64 / (n.max(2) - 1) as f64)
            .collect()
    }
}

/// (D² + μ)⁻¹f as a sum of Green-function responses.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventField {
    pub mu: Complex64,
    coeffs: EdgeCoefficients,
    /// Quadrature nodes and weighted samples per edge.
    sources: Vec<Vec<(f64, Complex64)>>,
}

impl ResolventField {
    pub fn eval(&self, edge: usize, t: f64) -> Complex64 {
        let iz = I * self.coeffs.z;
        let free: Complex64 = self.sources[edge]
            .iter()
            .map(|&(s, w)| w * (iz * (t - s).abs()).exp())
            .sum::<Complex64>()
            / (2.0 * iz);
        self.coeffs.value(edge, t) + free
    }
}

/// Applies the resolvent of the graph operator to `f`; Simpson quadrature
/// over the samples, one linear solve with a right-hand side per node.
pub fn resolvent_apply(
    graph: &MetricGraph,
    mu: Complex64,
    eps: f64,
    f: &GraphFunction,
) -> Result<ResolventField> {
    if f.samples.len() != graph.edges().len() {
        return Err(Error::invalid("graph function has the wrong number of edges"));
    }
    let sys = assemble_secular(graph, mu, eps)?;
    sys.check_resonance(RESONANCE_FLOOR)?;
    let mut sources = Vec::with_capacity(f.samples.len());
    let mut cols: Vec<(usize, f64, Complex64)> = Vec::new();
    for (j, s) in f.samples.iter().enumerate() {
        if s.is_empty() || s.iter().all(|x| *x == c(0.0, 0.0)) {
            sources.push(Vec::new());
            continue;
        }
        let n = s.len();
        let h = f.spans[j] / (n - 1) as f64;
        let w = simpson_weights(n, h)
            .ok_or_else(|| Error::invalid("edge samples need an odd count ≥ 3"))?;
        if s[0] != c(0.0, 0.0) || s[n - 1] != c(0.0, 0.0) {
            return Err(Error::invalid(format!(
                "support of f touches a vertex on edge {j}"
            )));
        }
        if graph.edge(j).length.is_finite() {
            let l = graph.edge(j).length.value().unwrap();
            if (f.spans[j] - l).abs() > 1e-12 * l {
                return Err(Error::invalid("finite-edge samples must span the edge"));
            }
        }
        let mut src = Vec::new();
        for k in 1..n - 1 {
            if s[k] != c(0.0, 0.0) {
                let t = k as f64 * h;
                src.push((t, s[k] * w[k]));
                cols.push((j, t, s[k] * w[k]));
            }
        }
        sources.push(src);
    }
    let nu = sys.layout.unknowns;
    let mut rhs = vec![c(0.0, 0.0); nu];
    for &(j, t, w) in &cols {
        let r = sys.point_source_rhs(graph, j, t);
        for i in 0..nu {
            rhs[i] += w * r[i];
        }
    }
    let b = CMat::from_column_slice(nu, 1, &rhs);
    let x = solve(&sys.matrix, &b).ok_or_else(|| Error::Resonance("singular system".into()))?;
    Ok(ResolventField {
        mu,
        coeffs: EdgeCoefficients::from_solution(&sys, x.as_slice()),
        sources,
    })
}
