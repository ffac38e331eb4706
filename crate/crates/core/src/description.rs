//! JSON graph descriptions.
//!
//! ```json
//! {"thinfiber_schema": 1,
//!  "vertices": [{"id": 0}, {"id": 1}],
//!  "edges": [{"from": 0, "to": 1, "length": 1.0}, {"from": 0, "to": "inf", "length": "inf"}],
//!  "conditions": [{"vertex": 0, "type": "kirchhoff"}, {"vertex": 1, "type": "dirichlet"}]}
//! ```
//!
//! Matrices are row-major lists of `[re, im]` pairs, either flat or as rows.

use crate::conditions::{
    ProjectionPair, ScatteringMatrixFn, VertexCondition, SNAP_TOL_FD,
};
use crate::error::{Error, Result};
use crate::graph::{EdgeLength, EdgeSpec, MetricGraph};
use crate::linalg::{c, CMat, RMat};
use crate::model1d::Potential1D;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDescription {
    pub thinfiber_schema: u32,
    pub vertices: Vec<VertexDesc>,
    pub edges: Vec<EdgeDesc>,
    #[serde(default)]
    pub conditions: Vec<ConditionDesc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDesc {
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDesc {
    pub from: u64,
    pub to: Endpoint,
    pub length: Length,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Vertex(u64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDesc {
    pub vertex: u64,
    #[serde(flatten)]
    pub spec: ConditionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConditionSpec {
    Dirichlet,
    Neumann,
    Kirchhoff,
    GeneralizedKirchhoff {
        rho: Vec<f64>,
    },
    Scattering {
        #[serde(default)]
        lambda0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<MatrixDesc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<TableDesc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    Projection {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        projection: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        signs: Option<Vec<i8>>,
    },
    Model1d {
        potential: Vec<f64>,
        #[serde(default)]
        lambda0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixDesc {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDesc {
    pub lambda: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<MatrixDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_tol: Option<f64>,
}

impl MatrixDesc {
    pub fn to_matrix(&self) -> Result<CMat> {
        let flat: Vec<[f64; 2]> = match self {
            MatrixDesc::Flat(v) => v.clone(),
            MatrixDesc::Rows(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Schema("matrix rows must form a square".into()));
                }
                rows.iter().flatten().copied().collect()
            }
        };
        let d = (flat.len() as f64).sqrt().round() as usize;
        if d * d != flat.len() || d == 0 {
            return Err(Error::Schema(format!(
                "matrix with {} entries is not square",
                flat.len()
            )));
        }
        Ok(CMat::from_row_iterator(
            d,
            d,
            flat.iter().map(|p| c(p[0], p[1])),
        ))
    }

    pub fn from_matrix(m: &CMat) -> Self {
        let mut v = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixDesc::Flat(v)
    }
}

fn real_square(v: &[f64], what: &str) -> Result<RMat> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::Schema(format!("{what} is not a square matrix")));
    }
    Ok(RMat::from_row_slice(d, d, v))
}

fn row_major(m: &RMat) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn is_inf(s: &str) -> bool {
    matches!(s, "inf" | "infinity" | "INFINITY" | "Infinity")
}

impl ConditionSpec {
    pub fn to_condition(&self) -> Result<VertexCondition> {
        Ok(match self {
            ConditionSpec::Dirichlet => VertexCondition::Dirichlet,
            ConditionSpec::Neumann => VertexCondition::Neumann,
            ConditionSpec::Kirchhoff => VertexCondition::Kirchhoff,
            ConditionSpec::GeneralizedKirchhoff { rho } => {
                VertexCondition::generalized_kirchhoff(rho.clone())?
            }
            ConditionSpec::Scattering {
                lambda0,
                lambda1,
                matrix,
                table,
                tol,
            } => {
                let f = match (matrix, table) {
                    (Some(m), None) => ScatteringMatrixFn::constant(
                        m.to_matrix()?,
                        *lambda0,
                        lambda1.unwrap_or(f64::INFINITY),
                        tol.unwrap_or(1e-10),
                    )?,
                    (None, Some(t)) => {
                        let mats = t
                            .t
                            .iter()
                            .map(|m| m.to_matrix())
                            .collect::<Result<Vec<_>>>()?;
                        ScatteringMatrixFn::table(
                            *lambda0,
                            t.lambda.clone(),
                            mats,
                            t.degree,
                            tol.unwrap_or(SNAP_TOL_FD),
                            t.snap_tol.unwrap_or(SNAP_TOL_FD),
                        )?
                    }
                    _ => {
                        return Err(Error::Schema(
                            "scattering condition needs exactly one of \"matrix\" or \"table\""
                                .into(),
                        ))
                    }
                };
                VertexCondition::Scattering(f)
            }
            ConditionSpec::Projection {
                projection,
                rotation,
                signs,
            } => match (projection, rotation, signs) {
                (Some(p), None, None) => VertexCondition::Projection(
                    ProjectionPair::from_projection(&real_square(p, "projection")?)?,
                ),
                (None, Some(r), Some(s)) => VertexCondition::Projection(
                    ProjectionPair::from_rotation(real_square(r, "rotation")?, s.clone())?,
                ),
                _ => {
                    return Err(Error::Schema(
                        "projection condition needs \"projection\" or \"rotation\" with \"signs\""
                            .into(),
                    ))
                }
            },
            ConditionSpec::Model1d { potential, lambda0 } => VertexCondition::Scattering(
                ScatteringMatrixFn::model1d(Potential1D::new(potential.clone())?, *lambda0),
            ),
        })
    }

    pub fn from_condition(cond: &VertexCondition) -> Self {
        match cond {
            VertexCondition::Dirichlet => ConditionSpec::Dirichlet,
            VertexCondition::Neumann => ConditionSpec::Neumann,
            VertexCondition::Kirchhoff => ConditionSpec::Kirchhoff,
            VertexCondition::GeneralizedKirchhoff { rho } => {
                ConditionSpec::GeneralizedKirchhoff { rho: rho.clone() }
            }
            VertexCondition::Projection(p) => ConditionSpec::Projection {
                projection: None,
                rotation: Some(row_major(&p.rotation)),
                signs: Some(p.signs.clone()),
            },
            VertexCondition::Scattering(f) => match f {
                ScatteringMatrixFn::Constant {
                    matrix,
                    lambda0,
                    lambda1,
                } => ConditionSpec::Scattering {
                    lambda0: *lambda0,
                    lambda1: lambda1.is_finite().then_some(*lambda1),
                    matrix: Some(MatrixDesc::from_matrix(matrix)),
                    table: None,
                    tol: None,
                },
                ScatteringMatrixFn::Table {
                    lambda0,
                    lambdas,
                    matrices,
                    degree,
                    snap_tol,
                    ..
                } => ConditionSpec::Scattering {
                    lambda0: *lambda0,
                    lambda1: None,
                    matrix: None,
                    table: Some(TableDesc {
                        lambda: lambdas.clone(),
                        t: matrices.iter().map(MatrixDesc::from_matrix).collect(),
                        degree: Some(*degree),
                        snap_tol: Some(*snap_tol),
                    }),
                    tol: None,
                },
                ScatteringMatrixFn::Model1d { potential, lambda0 } => ConditionSpec::Model1d {
                    potential: potential.values().to_vec(),
                    lambda0: *lambda0,
                },
            },
        }
    }
}

/// Validates a description and builds the graph.
pub fn build_graph(desc: &GraphDescription) -> Result<MetricGraph> {
    if desc.thinfiber_schema != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported thinfiber_schema {} (expected {SCHEMA_VERSION})",
            desc.thinfiber_schema
        )));
    }
    let labels: Vec<u64> = desc.vertices.iter().map(|v| v.id).collect();
    let index = |id: u64| -> Result<usize> {
        labels
            .iter()
            .position(|&l| l == id)
            .ok_or_else(|| Error::invalid(format!("edge references unknown vertex {id}")))
    };
    let mut edges = Vec::with_capacity(desc.edges.len());
    for e in &desc.edges {
        let start = index(e.from)?;
        let finish = match &e.to {
            Endpoint::Vertex(id) => Some(index(*id)?),
            Endpoint::Named(s) if is_inf(s) => None,
            Endpoint::Named(s) => {
                return Err(Error::Schema(format!("edge endpoint \"{s}\" is not \"inf\"")))
            }
        };
        let length = match &e.length {
            Length::Value(l) => EdgeLength::Finite(*l),
            Length::Named(s) if is_inf(s) => EdgeLength::Infinite,
            Length::Named(s) => {
                return Err(Error::Schema(format!("edge length \"{s}\" is not a number or \"inf\"")))
            }
        };
        edges.push(EdgeSpec {
            start,
            finish,
            length,
        });
    }
    let mut conds: Vec<Option<VertexCondition>> = vec![None; labels.len()];
    for cd in &desc.conditions {
        let i = labels
            .iter()
            .position(|&l| l == cd.vertex)
            .ok_or_else(|| Error::invalid(format!("condition for unknown vertex {}", cd.vertex)))?;
        if conds[i].is_some() {
            return Err(Error::invalid(format!("two conditions for vertex {}", cd.vertex)));
        }
        conds[i] = Some(cd.spec.to_condition()?);
    }
    MetricGraph::new(labels, edges, conds)
}

pub fn parse_graph(json: &str) -> Result<MetricGraph> {
    let desc: GraphDescription =
        serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))?;
    build_graph(&desc)
}

/// Serializes a graph back to its description.
pub fn describe(graph: &MetricGraph) -> GraphDescription {
    let vertices = graph
        .vertices()
        .iter()
        .map(|v| VertexDesc { id: v.id })
        .collect();
    let edges = graph
        .edges()
        .iter()
        .map(|e| EdgeDesc {
            from: graph.vertex(e.start).id,
            to: match e.finish {
                Some(f) => Endpoint::Vertex(graph.vertex(f).id),
                None => Endpoint::Named("inf".into()),
            },
            length: match e.length {
                EdgeLength::Finite(l) => Length::Value(l),
                EdgeLength::Infinite => Length::Named("inf".into()),
            },
        })
        .collect();
    let conditions = graph
        .vertices()
        .iter()
        .filter_map(|v| {
            v.condition.as_ref().map(|c| ConditionDesc {
                vertex: v.id,
                spec: ConditionSpec::from_condition(c),
            })
        })
        .collect();
    GraphDescription {
        thinfiber_schema: SCHEMA_VERSION,
        vertices,
        edges,
        conditions,
    }
}

pub fn to_json(graph: &MetricGraph) -> String {
    serde_json::to_string_pretty(&describe(graph)).expect("graph descriptions serialize")
}
