//! The limiting metric graph.
//!
//! Each edge carries a coordinate t running from its first endpoint
//! (t = 0) to its second (t = l). Infinite edges have one finite endpoint,
//! where t = 0. At every vertex the edge-ends are kept in description
//! order; that order fixes the component order of ζ at the vertex.

use crate::conditions::VertexCondition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLength {
    Finite(f64),
    Infinite,
}

impl EdgeLength {
    pub fn is_finite(&self) -> bool {
        matches!(self, EdgeLength::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            EdgeLength::Finite(l) => Some(*l),
            EdgeLength::Infinite => None,
        }
    }
}

/// Which end of an edge meets a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    /// t = 0.
    Start,
    /// t = l.
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEnd {
    pub edge: usize,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub start: usize,
    pub finish: Option<usize>,
    pub length: EdgeLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    V1,
    V2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    /// Label from the description.
    pub id: u64,
    pub kind: VertexKind,
    pub condition: Option<VertexCondition>,
    pub adjacency: Vec<EdgeEnd>,
}

impl Vertex {
    pub fn degree(&self) -> usize {
        self.adjacency.len()
    }
}

/// Validated, immutable metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

/// Edge input for [`MetricGraph::new`]: vertex indices and length.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub start: usize,
    pub finish: Option<usize>,
    pub length: EdgeLength,
}

impl MetricGraph {
    /// Builds and validates a graph. `labels[i]` is the external id of vertex i,
    /// `conditions[i]` its gluing condition (if already known).
    pub fn new(
        labels: Vec<u64>,
        edges: Vec<EdgeSpec>,
        conditions: Vec<Option<VertexCondition>>,
    ) -> Result<Self> {
        let n = labels.len();
        if conditions.len() != n {
            return Err(Error::invalid("one condition slot per vertex required"));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate vertex id"));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut out_edges = Vec::with_capacity(edges.len());
        for (k, e) in edges.into_iter().enumerate() {
            if e.start >= n || e.finish.is_some_and(|f| f >= n) {
                return Err(Error::invalid(format!("edge {k} references a missing vertex")));
            }
            match (e.finish, e.length) {
                (Some(_), EdgeLength::Infinite) => {
                    return Err(Error::invalid(format!(
                        "infinite edge {k} has two finite endpoints"
                    )))
                }
                (None, EdgeLength::Finite(_)) => {
                    return Err(Error::invalid(format!(
                        "edge {k} runs to infinity but has a finite length"
                    )))
                }
                (_, EdgeLength::Finite(l)) if !(l > 0.0) || !l.is_finite() => {
                    return Err(Error::invalid(format!("edge {k} has non-positive length {l}")))
                }
                _ => {}
            }
            adjacency[e.start].push(EdgeEnd {
                edge: k,
                end: End::Start,
            });
            if let Some(f) = e.finish {
                adjacency[f].push(EdgeEnd {
                    edge: k,
                    end: End::Finish,
                });
            }
            out_edges.push(Edge {
                start: e.start,
                finish: e.finish,
                length: e.length,
            });
        }
        let mut vertices = Vec::with_capacity(n);
        for (i, ((id, adj), cond)) in labels
            .into_iter()
            .zip(adjacency)
            .zip(conditions)
            .enumerate()
        {
            if adj.is_empty() {
                return Err(Error::invalid(format!("vertex {id} has degree 0")));
            }
            let kind = if adj.len() == 1 {
                VertexKind::V1
            } else {
                VertexKind::V2
            };
            let v = Vertex {
                id,
                kind,
                condition: None,
                adjacency: adj,
            };
            let v = Self::attach(v, cond).map_err(|e| match e {
                Error::Invalid(m) => Error::Invalid(format!("vertex index {i}: {m}")),
                other => other,
            })?;
            vertices.push(v);
        }
        Ok(MetricGraph {
            vertices,
            edges: out_edges,
        })
    }

    fn attach(mut v: Vertex, cond: Option<VertexCondition>) -> Result<Vertex> {
        if let Some(c) = &cond {
            if v.kind == VertexKind::V1 && !c.is_end_condition() {
                return Err(Error::invalid(format!(
                    "degree-1 vertex {} carries a {} condition; only dirichlet/neumann allowed",
                    v.id,
                    c.name()
                )));
            }
            if let Some(k) = c.fixed_dim() {
                if k != v.degree() {
                    return Err(Error::invalid(format!(
                        "{} condition of dimension {k} at vertex {} of degree {}",
                        c.name(),
                        v.id,
                        v.degree()
                    )));
                }
            }
        }
        v.condition = cond;
        Ok(v)
    }

    /// Returns a copy with the given conditions attached (re-validated).
    pub fn with_conditions(
        mut self,
        conds: impl IntoIterator<Item = (usize, VertexCondition)>,
    ) -> Result<Self> {
        for (i, c) in conds {
            if i >= self.vertices.len() {
                return Err(Error::invalid(format!("no vertex index {i}")));
            }
            let v = std::mem::replace(
                &mut self.vertices[i],
                Vertex {
                    id: 0,
                    kind: VertexKind::V1,
                    condition: None,
                    adjacency: Vec::new(),
                },
            );
            self.vertices[i] = Self::attach(v, Some(c))?;
        }
        Ok(self)
    }

    pub fn with_condition(self, vertex: usize, cond: VertexCondition) -> Result<Self> {
        self.with_conditions([(vertex, cond)])
    }

    /// Attaches `cond` to every degree-1 vertex.
    pub fn with_end_conditions(self, cond: VertexCondition) -> Result<Self> {
        let ends: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| self.vertices[i].kind == VertexKind::V1)
            .collect();
        self.with_conditions(ends.into_iter().map(|i| (i, cond.clone())))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn edge(&self, k: usize) -> &Edge {
        &self.edges[k]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.vertices[v].degree()
    }

    pub fn is_compact(&self) -> bool {
        self.edges.iter().all(|e| e.length.is_finite())
    }

    pub fn infinite_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&k| !self.edges[k].length.is_finite())
            .collect()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn v2_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].kind == VertexKind::V2)
            .collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().filter_map(|e| e.length.value()).sum()
    }
}

/// Star with centre vertex 0 and one edge per entry of `lengths`, each with
/// t = 0 at the centre. Finite edges end at new vertices 1, 2, … in edge order.
pub fn star_graph(d: usize, lengths: &[EdgeLength]) -> Result<MetricGraph> {
    if d < 2 {
        return Err(Error::invalid("a star needs d ≥ 2"));
    }
    if lengths.len() != d {
        return Err(Error::invalid("one length per edge required"));
    }
    let mut labels = vec![0u64];
    let mut edges = Vec::with_capacity(d);
    for &l in lengths {
        let finish = if l.is_finite() {
            labels.push(labels.len() as u64);
            Some(labels.len() - 1)
        } else {
            None
        };
        edges.push(EdgeSpec {
            start: 0,
            finish,
            length: l,
        });
    }
    let n = labels.len();
    MetricGraph::new(labels, edges, vec![None; n])
}

/// Interval [0, l] with the given end conditions.
pub fn interval(l: f64, left: VertexCondition, right: VertexCondition) -> Result<MetricGraph> {
    MetricGraph::new(
        vec![0, 1],
        vec![EdgeSpec {
            start: 0,
            finish: Some(1),
            length: EdgeLength::Finite(l),
        }],
        vec![Some(left), Some(right)],
    )
}

/// Half-line [0, ∞) with an end condition at 0.
pub fn half_line(cond: VertexCondition) -> Result<MetricGraph> {
    MetricGraph::new(
        vec![0],
        vec![EdgeSpec {
            start: 0,
            finish: None,
            length: EdgeLength::Infinite,
        }],
        vec![Some(cond)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_graph() {
        let g = MetricGraph::new(
            vec![0],
            vec![EdgeSpec {
                start: 0,
                finish: None,
                length: EdgeLength::Infinite,
            }],
            vec![None],
        )
        .unwrap();
        assert_eq!(g.infinite_edges(), vec![0]);
        assert_eq!(g.vertex(0).kind, VertexKind::V1);
        assert!(g.v2_vertices().is_empty());
    }

    #[test]
    fn stars() {
        let g = star_graph(3, &[EdgeLength::Infinite; 3]).unwrap();
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.v2_vertices(), vec![0]);
        let g = star_graph(
            4,
            &[
                EdgeLength::Finite(1.0),
                EdgeLength::Finite(1.0),
                EdgeLength::Infinite,
                EdgeLength::Infinite,
            ],
        )
        .unwrap();
        assert_eq!(g.vertices().len(), 3);
        assert_eq!(g.vertex(2).adjacency[0].edge, 1);
        assert!(star_graph(1, &[EdgeLength::Infinite]).is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        let bad = |finish, length| {
            MetricGraph::new(
                vec![0, 1],
                vec![EdgeSpec {
                    start: 0,
                    finish,
                    length,
                }],
                vec![None, None],
            )
        };
        assert!(bad(Some(1), EdgeLength::Finite(0.0)).is_err());
        assert!(bad(Some(1), EdgeLength::Infinite).is_err());
        assert!(bad(Some(5), EdgeLength::Finite(1.0)).is_err());
    }

    #[test]
    fn end_vertices_take_only_end_conditions() {
        let g = interval(1.0, VertexCondition::Dirichlet, VertexCondition::Neumann);
        assert!(g.is_ok());
        let g = interval(1.0, VertexCondition::Kirchhoff, VertexCondition::Neumann);
        assert!(g.is_err());
    }
}
