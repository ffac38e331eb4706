use crate::conditions::{rows_at_z, ConditionRows};
use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph};
use crate::linalg::{c, det, sqrt_upper, CMat, I};
use num_complex::Complex64;

/// Relative determinant below which a system counts as resonant.
pub const RESONANCE_FLOOR: f64 = 1e-8;
/// Radius around μ = 0 excluded from all √μ-based operations.
pub const MU_MIN_CUTOFF: f64 = 1e-6;

/// Position of each edge's coefficients in the unknown vector.
///
/// Edges are taken in id order; a finite edge contributes (a, b̃) for the
/// basis e^{izt}, e^{iz(l−t)}, an infinite edge only the outgoing a.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub offsets: Vec<usize>,
    pub lengths: Vec<Option<f64>>,
    pub unknowns: usize,
}

impl Layout {
    pub fn new(graph: &MetricGraph) -> Self {
        let mut offsets = Vec::with_capacity(graph.edges().len());
        let mut lengths = Vec::with_capacity(graph.edges().len());
        let mut n = 0;
        for e in graph.edges() {
            offsets.push(n);
            lengths.push(e.length.value());
            n += if e.length.is_finite() { 2 } else { 1 };
        }
        Layout {
            offsets,
            lengths,
            unknowns: n,
        }
    }
}

/// (unknown index, value coefficient, outward-derivative coefficient) of
/// the ansatz at one edge end.
pub(crate) fn end_data(
    layout: &Layout,
    edge: usize,
    end: End,
    z: Complex64,
) -> Vec<(usize, Complex64, Complex64)> {
    let o = layout.offsets[edge];
    let iz = I * z;
    let one = c(1.0, 0.0);
    match (layout.lengths[edge], end) {
        (Some(l), End::Start) => {
            let e = (iz * l).exp();
            vec![(o, one, iz), (o + 1, e, -iz * e)]
        }
        (Some(l), End::Finish) => {
            let e = (iz * l).exp();
            vec![(o, e, -iz * e), (o + 1, one, iz)]
        }
        (None, _) => vec![(o, one, iz)],
    }
}

/// The square system M(√μ)·x = rhs obtained from all vertex conditions.
#[derive(Debug, Clone)]
pub struct SecularSystem {
    pub z: Complex64,
    pub eps: f64,
    pub matrix: CMat,
    pub layout: Layout,
    rows: Vec<ConditionRows>,
    row_offsets: Vec<usize>,
    scales: Vec<Vec<f64>>,
}

impl SecularSystem {
    /// Assembles at the graph variable z = √μ. With `frozen` the row scales
    /// of an earlier assembly are reused, making M analytic in z.
    pub fn assemble_z(
        graph: &MetricGraph,
        z: Complex64,
        eps: f64,
        frozen: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        let layout = Layout::new(graph);
        let n = layout.unknowns;
        let mut matrix = CMat::zeros(n, n);
        let mut rows = Vec::with_capacity(graph.vertices().len());
        let mut row_offsets = Vec::with_capacity(graph.vertices().len());
        let mut scales = Vec::with_capacity(graph.vertices().len());
        let mut r0 = 0;
        for (vi, v) in graph.vertices().iter().enumerate() {
            let cond = v.condition.as_ref().ok_or_else(|| {
                Error::invalid(format!("vertex {} has no gluing condition", v.id))
            })?;
            let d = v.degree();
            let (cr, sc) = rows_at_z(cond, d, z, eps, frozen.map(|f| f[vi].as_slice()))
                .map_err(|e| match e {
                    Error::RankDeficient { rank, expected, .. } => Error::RankDeficient {
                        vertex: Some(vi),
                        rank,
                        expected,
                    },
                    other => other,
                })?;
            for (k, ee) in v.adjacency.iter().enumerate() {
                for (u, val, der) in end_data(&layout, ee.edge, ee.end, z) {
                    for r in 0..d {
                        matrix[(r0 + r, u)] += cr.val[(r, k)] * val + cr.der[(r, k)] * der;
                    }
                }
            }
            rows.push(cr);
            row_offsets.push(r0);
            scales.push(sc);
            r0 += d;
        }
        debug_assert_eq!(r0, n);
        Ok(SecularSystem {
            z,
            eps,
            matrix,
            layout,
            rows,
            row_offsets,
            scales,
        })
    }

    pub fn scales(&self) -> &[Vec<f64>] {
        &self.scales
    }

    pub fn determinant(&self) -> Complex64 {
        det(&self.matrix)
    }

    /// |det M| divided by the product of the row norms of M (Hadamard bound).
    pub fn relative_determinant(&self) -> f64 {
        let mut log_bound = 0.0;
        for r in 0..self.matrix.nrows() {
            let nr = self.matrix.row(r).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if nr == 0.0 {
                return 0.0;
            }
            log_bound += nr.ln();
        }
        (self.determinant().norm().ln() - log_bound).exp()
    }

    /// Error unless the relative determinant exceeds `floor`.
    pub fn check_resonance(&self, floor: f64) -> Result<()> {
        let rel = self.relative_determinant();
        if rel < floor {
            return Err(Error::Resonance(format!(
                "relative determinant {rel:.3e} below {floor:.1e} at √μ = {}",
                self.z
            )));
        }
        Ok(())
    }

    fn subtract_end_terms(&self, graph: &MetricGraph, rhs: &mut [Complex64], terms: &[(usize, End, Complex64, Complex64)]) {
        for (vi, v) in graph.vertices().iter().enumerate() {
            let cr = &self.rows[vi];
            let r0 = self.row_offsets[vi];
            for (k, ee) in v.adjacency.iter().enumerate() {
                for &(edge, end, val, der) in terms {
                    if ee.edge == edge && ee.end == end {
                        for r in 0..v.degree() {
                            rhs[r0 + r] -= cr.val[(r, k)] * val + cr.der[(r, k)] * der;
                        }
                    }
                }
            }
        }
    }

    /// Right-hand side for the free term e^{iz|t−t₀|}/(2iz) on `edge`.
    pub fn point_source_rhs(&self, graph: &MetricGraph, edge: usize, t0: f64) -> Vec<Complex64> {
        let z = self.z;
        let iz = I * z;
        let mut terms = Vec::with_capacity(2);
        let e0 = (iz * t0).exp();
        terms.push((edge, End::Start, e0 / (2.0 * iz), -e0 * 0.5));
        if let Some(l) = self.layout.lengths[edge] {
            let e1 = (iz * (l - t0)).exp();
            terms.push((edge, End::Finish, e1 / (2.0 * iz), -e1 * 0.5));
        }
        let mut rhs = vec![c(0.0, 0.0); self.layout.unknowns];
        self.subtract_end_terms(graph, &mut rhs, &terms);
        rhs
    }

    /// Right-hand side for the incoming wave e^{−izt} on infinite edge `edge`.
    pub fn incident_rhs(&self, graph: &MetricGraph, edge: usize) -> Vec<Complex64> {
        let iz = I * self.z;
        let mut rhs = vec![c(0.0, 0.0); self.layout.unknowns];
        self.subtract_end_terms(graph, &mut rhs, &[(edge, End::Start, c(1.0, 0.0), -iz)]);
        rhs
    }
}

/// Assembles the secular system at μ; the branch √μ has Im ≥ 0.
pub fn assemble_secular(graph: &MetricGraph, mu: Complex64, eps: f64) -> Result<SecularSystem> {
    if mu.norm() < MU_MIN_CUTOFF && eps > 0.0 {
        return Err(Error::invalid(format!(
            "|μ| = {:.2e} is inside the branch-point cutoff",
            mu.norm()
        )));
    }
    SecularSystem::assemble_z(graph, sqrt_upper(mu), eps, None)
}

/// h(μ, ε) = det M(√μ).
pub fn secular_determinant(graph: &MetricGraph, mu: Complex64, eps: f64) -> Result<Complex64> {
    Ok(assemble_secular(graph, mu, eps)?.determinant())
}
