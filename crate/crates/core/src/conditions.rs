//! Gluing conditions at graph vertices.
//!
//! A condition at a vertex of degree d is a set of d linear relations
//! between the edge traces ζ(0) and outward derivatives ζ'(0), written as
//! `A_val·ζ(0) + A_der·ζ'(0) = 0`.

use crate::error::{Error, Result};
use crate::linalg::{
    c, identity, numerical_rank, polyfit, solve, sqrt_upper, sym_eigen_sorted,
    unitary_symmetric_defects, CMat, Poly, RMat, I,
};
use crate::model1d::{self, Potential1D};
use num_complex::Complex64;

/// Default eigenvalue snapping tolerance for analytic threshold matrices.
pub const SNAP_TOL_ANALYTIC: f64 = 1e-6;
/// Default snapping tolerance for finite-difference threshold matrices.
pub const SNAP_TOL_FD: f64 = 5e-2;

/// Rotated Dirichlet/Neumann splitting of a threshold matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    /// Columns c_s of a real orthogonal matrix.
    pub rotation: RMat,
    /// ν_s = −1 marks a Dirichlet direction, +1 a Neumann direction.
    pub signs: Vec<i8>,
    /// Orthogonal projection onto the Dirichlet directions.
    pub projection: RMat,
    pub rank: usize,
}

impl ProjectionPair {
    pub fn from_rotation(rotation: RMat, signs: Vec<i8>) -> Result<Self> {
        let d = rotation.nrows();
        if rotation.ncols() != d || signs.len() != d {
            return Err(Error::invalid("rotation must be square and match the sign count"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("signs must be ±1"));
        }
        let defect = (rotation.transpose() * &rotation - RMat::identity(d, d)).amax();
        if defect > 1e-8 {
            return Err(Error::invalid(format!("rotation is not orthogonal (defect {defect:.2e})")));
        }
        let half = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            signs.iter().map(|&s| (1.0 - s as f64) / 2.0),
        ));
        let projection = &rotation * half * rotation.transpose();
        let rank = signs.iter().filter(|&&s| s == -1).count();
        Ok(ProjectionPair {
            rotation,
            signs,
            projection,
            rank,
        })
    }

    /// Builds the pair from an orthogonal projection matrix.
    pub fn from_projection(p: &RMat) -> Result<Self> {
        let d = p.nrows();
        if p.ncols() != d {
            return Err(Error::invalid("projection must be square"));
        }
        let sym = (p - p.transpose()).amax();
        let idem = (p * p - p).amax();
        if sym > 1e-8 || idem > 1e-8 {
            return Err(Error::invalid("matrix is not an orthogonal projection"));
        }
        let (vals, vecs) = sym_eigen_sorted(p);
        let signs = vals.iter().map(|&x| if x > 0.5 { -1 } else { 1 }).collect();
        Self::from_rotation(vecs, signs)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    /// C·diag(ν)·Cᵀ, the threshold scattering matrix this pair encodes.
    pub fn threshold_matrix(&self) -> RMat {
        let d = self.dim();
        let nu = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            self.signs.iter().map(|&s| s as f64),
        ));
        &self.rotation * nu * self.rotation.transpose()
    }

    pub fn complement(&self) -> RMat {
        RMat::identity(self.dim(), self.dim()) - &self.projection
    }
}

/// λ ↦ T(λ), evaluated through z = √(λ − λ₀).
#[derive(Debug, Clone, PartialEq)]
pub enum ScatteringMatrixFn {
    /// λ-independent matrix.
    Constant {
        matrix: CMat,
        lambda0: f64,
        lambda1: f64,
    },
    /// Samples on [λ₀, λ₁], fitted entrywise by a polynomial in z.
    Table {
        lambda0: f64,
        lambdas: Vec<f64>,
        matrices: Vec<CMat>,
        degree: usize,
        snap_tol: f64,
        fits: Vec<Poly>,
    },
    /// Thin-potential line model; the argument z is the scaled wave number.
    Model1d { potential: Potential1D, lambda0: f64 },
}

/// Norm report of [`check_unitary_symmetric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    pub pass: bool,
}

pub fn check_unitary_symmetric(t: &CMat, tol: f64) -> UnitarityReport {
    let (u, s) = unitary_symmetric_defects(t);
    UnitarityReport {
        unitarity_defect: u,
        symmetry_defect: s,
        pass: u <= tol && s <= tol,
    }
}

impl ScatteringMatrixFn {
    pub fn constant(matrix: CMat, lambda0: f64, lambda1: f64, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("scattering matrix must be square"));
        }
        let rep = check_unitary_symmetric(&matrix, tol);
        if !rep.pass {
            return Err(Error::invalid(format!(
                "scattering matrix fails unitarity/symmetry (defects {:.2e}, {:.2e})",
                rep.unitarity_defect, rep.symmetry_defect
            )));
        }
        Ok(ScatteringMatrixFn::Constant {
            matrix,
            lambda0,
            lambda1,
        })
    }

    /// Table of T(λ_i); every sample is checked against `tol`.
    pub fn table(
        lambda0: f64,
        lambdas: Vec<f64>,
        matrices: Vec<CMat>,
        degree: Option<usize>,
        tol: f64,
        snap_tol: f64,
    ) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != matrices.len() {
            return Err(Error::invalid("table needs matching, non-empty λ and T lists"));
        }
        let d = matrices[0].nrows();
        for (l, m) in lambdas.iter().zip(&matrices) {
            if *l < lambda0 {
                return Err(Error::invalid("table λ below λ₀"));
            }
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::invalid("table matrices differ in size"));
            }
            let rep = check_unitary_symmetric(m, tol);
            if !rep.pass {
                return Err(Error::invalid(format!(
                    "table entry at λ={l} fails unitarity/symmetry (defects {:.2e}, {:.2e})",
                    rep.unitarity_defect, rep.symmetry_defect
                )));
            }
        }
        let degree = degree.unwrap_or((lambdas.len() - 1).min(3));
        if degree + 1 > lambdas.len() {
            return Err(Error::invalid("table too short for the requested degree"));
        }
        let zs: Vec<f64> = lambdas.iter().map(|l| (l - lambda0).sqrt()).collect();
        let mut fits = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let ys: Vec<Complex64> = matrices.iter().map(|m| m[(i, j)]).collect();
                fits.push(polyfit(&zs, &ys, degree).0);
            }
        }
        Ok(ScatteringMatrixFn::Table {
            lambda0,
            lambdas,
            matrices,
            degree,
            snap_tol,
            fits,
        })
    }

    pub fn model1d(potential: Potential1D, lambda0: f64) -> Self {
        ScatteringMatrixFn::Model1d { potential, lambda0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScatteringMatrixFn::Constant { matrix, .. } => matrix.nrows(),
            ScatteringMatrixFn::Table { matrices, .. } => matrices[0].nrows(),
            ScatteringMatrixFn::Model1d { .. } => 2,
        }
    }

    pub fn lambda0(&self) -> f64 {
        match self {
            ScatteringMatrixFn::Constant { lambda0, .. }
            | ScatteringMatrixFn::Table { lambda0, .. }
            | ScatteringMatrixFn::Model1d { lambda0, .. } => *lambda0,
        }
    }

    /// Validity window [λ₀, λ₁].
    pub fn window(&self) -> (f64, f64) {
        match self {
            ScatteringMatrixFn::Constant {
                lambda0, lambda1, ..
            } => (*lambda0, *lambda1),
            ScatteringMatrixFn::Table {
                lambda0, lambdas, ..
            } => (
                *lambda0,
                lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            ScatteringMatrixFn::Model1d { lambda0, .. } => (*lambda0, f64::INFINITY),
        }
    }

    pub fn snap_tol(&self) -> f64 {
        match self {
            ScatteringMatrixFn::Table { snap_tol, .. } => *snap_tol,
            _ => SNAP_TOL_ANALYTIC,
        }
    }

    /// T at z = √(λ − λ₀); complex z gives the analytic continuation.
    pub fn eval_z(&self, z: Complex64) -> CMat {
        match self {
            ScatteringMatrixFn::Constant { matrix, .. } => matrix.clone(),
            ScatteringMatrixFn::Table { fits, matrices, .. } => {
                let d = matrices[0].nrows();
                CMat::from_fn(d, d, |i, j| fits[i * d + j].eval(z))
            }
            ScatteringMatrixFn::Model1d { potential, .. } => model1d::scattering_kappa(potential, z),
        }
    }

    /// T(λ) for λ in the validity window.
    pub fn eval(&self, lambda: f64) -> Result<CMat> {
        let (l0, l1) = self.window();
        if lambda < l0 || lambda > l1 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "λ={lambda} outside the validity window [{l0}, {l1}]"
            )));
        }
        Ok(self.eval_z(c((lambda - l0).sqrt(), 0.0)))
    }

    /// T(λ₀).
    pub fn threshold(&self) -> CMat {
        match self {
            ScatteringMatrixFn::Model1d { potential, .. } => model1d::threshold_matrix(potential),
            _ => self.eval_z(c(0.0, 0.0)),
        }
    }
}

/// The vertex gluing condition.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexCondition {
    Dirichlet,
    Neumann,
    Kirchhoff,
    GeneralizedKirchhoff { rho: Vec<f64> },
    Scattering(ScatteringMatrixFn),
    Projection(ProjectionPair),
}

impl VertexCondition {
    pub fn generalized_kirchhoff(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("generalized Kirchhoff weights must be positive"));
        }
        Ok(VertexCondition::GeneralizedKirchhoff { rho })
    }

    /// Dimension fixed by the condition's data, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            VertexCondition::GeneralizedKirchhoff { rho } => Some(rho.len()),
            VertexCondition::Scattering(f) => Some(f.dim()),
            VertexCondition::Projection(p) => Some(p.dim()),
            _ => None,
        }
    }

    pub fn is_end_condition(&self) -> bool {
        matches!(self, VertexCondition::Dirichlet | VertexCondition::Neumann)
    }

    /// Flux weights of the condition, used to normalize scattering amplitudes.
    pub fn flux_weights(&self, d: usize) -> Vec<f64> {
        match self {
            VertexCondition::GeneralizedKirchhoff { rho } => rho.clone(),
            _ => vec![1.0; d],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VertexCondition::Dirichlet => "dirichlet",
            VertexCondition::Neumann => "neumann",
            VertexCondition::Kirchhoff => "kirchhoff",
            VertexCondition::GeneralizedKirchhoff { .. } => "generalized_kirchhoff",
            VertexCondition::Scattering(_) => "scattering",
            VertexCondition::Projection(_) => "projection",
        }
    }
}

/// Condition rows `[A_val | A_der]`, each of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRows {
    pub val: CMat,
    pub der: CMat,
}

impl ConditionRows {
    pub fn matrix(&self) -> CMat {
        let d = self.val.nrows();
        let mut a = CMat::zeros(d, 2 * d);
        a.view_mut((0, 0), (d, d)).copy_from(&self.val);
        a.view_mut((0, d), (d, d)).copy_from(&self.der);
        a
    }

    fn row_norms(&self) -> Vec<f64> {
        (0..self.val.nrows())
            .map(|r| {
                (self.val.row(r).iter().chain(self.der.row(r).iter()))
                    .map(|x| x.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    fn scale_rows(&mut self, s: &[f64]) {
        for (r, &k) in s.iter().enumerate() {
            let f = if k > 0.0 { 1.0 / k } else { 1.0 };
            self.val.row_mut(r).scale_mut(f);
            self.der.row_mut(r).scale_mut(f);
        }
    }
}

fn check_dim(cond: &VertexCondition, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("vertex degree must be positive"));
    }
    if let Some(k) = cond.fixed_dim() {
        if k != d {
            return Err(Error::invalid(format!(
                "{} condition has dimension {k} but the vertex has degree {d}",
                cond.name()
            )));
        }
    }
    Ok(())
}

fn kirchhoff_rows(rho: &[f64]) -> ConditionRows {
    let d = rho.len();
    let mut val = CMat::zeros(d, d);
    let mut der = CMat::zeros(d, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for r in 0..d - 1 {
        val[(r, r)] = c(h, 0.0);
        val[(r, r + 1)] = c(-h, 0.0);
    }
    let norm = rho.iter().map(|x| x * x).sum::<f64>().sqrt();
    for j in 0..d {
        der[(d - 1, j)] = c(rho[j] / norm, 0.0);
    }
    ConditionRows { val, der }
}

fn projection_rows(p: &ProjectionPair) -> ConditionRows {
    let d = p.dim();
    let mut val = CMat::zeros(d, d);
    let mut der = CMat::zeros(d, d);
    for s in 0..d {
        let target = if p.signs[s] == -1 { &mut val } else { &mut der };
        for j in 0..d {
            target[(s, j)] = c(p.rotation[(j, s)], 0.0);
        }
    }
    ConditionRows { val, der }
}

/// Unnormalized rows at the graph variable z = √μ.
fn raw_rows(cond: &VertexCondition, d: usize, z: Complex64, eps: f64) -> Result<ConditionRows> {
    check_dim(cond, d)?;
    Ok(match cond {
        VertexCondition::Dirichlet => ConditionRows {
            val: identity(d),
            der: CMat::zeros(d, d),
        },
        VertexCondition::Neumann => ConditionRows {
            val: CMat::zeros(d, d),
            der: identity(d),
        },
        VertexCondition::Kirchhoff => kirchhoff_rows(&vec![1.0; d]),
        VertexCondition::GeneralizedKirchhoff { rho } => kirchhoff_rows(rho),
        VertexCondition::Projection(p) => projection_rows(p),
        VertexCondition::Scattering(f) => {
            if eps == 0.0 || z == c(0.0, 0.0) {
                let p = threshold_projection(&f.threshold(), f.snap_tol())?;
                projection_rows(&p)
            } else {
                let t = f.eval_z(z * eps);
                let id = identity(d);
                ConditionRows {
                    val: (&id - &t) * (-z),
                    der: (&id + &t) * I,
                }
            }
        }
    })
}

/// Rows at z, normalized row by row. With `frozen` the given scales are
/// used instead of the current norms, which keeps the rows analytic in z.
/// Returns the rows and the scales used.
pub(crate) fn rows_at_z(
    cond: &VertexCondition,
    d: usize,
    z: Complex64,
    eps: f64,
    frozen: Option<&[f64]>,
) -> Result<(ConditionRows, Vec<f64>)> {
    let mut rows = raw_rows(cond, d, z, eps)?;
    let scales = match frozen {
        Some(s) => s.to_vec(),
        None => rows.row_norms(),
    };
    rows.scale_rows(&scales);
    Ok((rows, scales))
}

/// Condition rows at μ = (λ − λ₀)/ε²; μ = 0 uses the threshold projection form.
pub fn condition_rows(
    cond: &VertexCondition,
    d: usize,
    mu: Complex64,
    eps: f64,
) -> Result<ConditionRows> {
    let z = sqrt_upper(mu);
    let (rows, _) = rows_at_z(cond, d, z, eps, None)?;
    let rank = numerical_rank(&rows.matrix(), 1e-10);
    if rank < d {
        return Err(Error::RankDeficient {
            vertex: None,
            rank,
            expected: d,
        });
    }
    Ok(rows)
}

/// Star-graph scattering matrix of the literal condition rows at z:
/// row p holds the outgoing amplitudes for incidence on edge p.
pub(crate) fn raw_star_scattering(
    cond: &VertexCondition,
    d: usize,
    z: Complex64,
    eps: f64,
) -> Result<CMat> {
    let (rows, _) = rows_at_z(cond, d, z, eps, None)?;
    let iz = I * z;
    let lhs = &rows.val + &rows.der * iz;
    let rhs = -(&rows.val - &rows.der * iz);
    let rank = numerical_rank(&lhs, 1e-12);
    if rank < d {
        return Err(Error::RankDeficient {
            vertex: None,
            rank,
            expected: d,
        });
    }
    let b = solve(&lhs, &rhs).ok_or_else(|| Error::numerical("singular star system"))?;
    Ok(b.transpose())
}

/// Flux-normalized star scattering matrix of `cond` at μ.
///
/// Conditions without λ-dependence are evaluated away from the branch point;
/// a scattering condition at μ = 0 returns its threshold value.
pub fn scattering_matrix_of_condition(
    cond: &VertexCondition,
    d: usize,
    mu: Complex64,
    eps: f64,
) -> Result<CMat> {
    check_dim(cond, d)?;
    let z = match cond {
        VertexCondition::Scattering(f) => {
            if mu == c(0.0, 0.0) || eps == 0.0 {
                let t = if eps == 0.0 {
                    let p = threshold_projection(&f.threshold(), f.snap_tol())?;
                    crate::linalg::to_complex(&p.threshold_matrix())
                } else {
                    f.threshold()
                };
                return Ok(t);
            }
            sqrt_upper(mu)
        }
        _ => {
            if mu == c(0.0, 0.0) {
                c(1.0, 0.0)
            } else {
                sqrt_upper(mu)
            }
        }
    };
    let t = raw_star_scattering(cond, d, z, eps)?;
    Ok(flux_normalize(&t, &cond.flux_weights(d)))
}

/// T̃_pj = T_pj·√(w_j/w_p).
pub(crate) fn flux_normalize(t: &CMat, w: &[f64]) -> CMat {
    CMat::from_fn(t.nrows(), t.ncols(), |p, j| t[(p, j)] * (w[j] / w[p]).sqrt())
}

/// Splits a threshold matrix into Dirichlet and Neumann directions.
pub fn threshold_projection(t0: &CMat, tol: f64) -> Result<ProjectionPair> {
    let d = t0.nrows();
    if t0.ncols() != d || d == 0 {
        return Err(Error::invalid("threshold matrix must be square"));
    }
    let rep = check_unitary_symmetric(t0, tol);
    if !rep.pass {
        return Err(Error::NotThreshold(format!(
            "unitarity defect {:.3e}, symmetry defect {:.3e} exceed {tol:.1e}",
            rep.unitarity_defect, rep.symmetry_defect
        )));
    }
    let im = t0.iter().fold(0.0f64, |m, x| m.max(x.im.abs()));
    if im > tol {
        return Err(Error::NotThreshold(format!(
            "imaginary part {im:.3e} exceeds {tol:.1e}"
        )));
    }
    let re = t0.map(|x| x.re);
    let (vals, vecs) = sym_eigen_sorted(&re);
    let mut signs = Vec::with_capacity(d);
    for &v in &vals {
        if (v - 1.0).abs() <= tol {
            signs.push(1);
        } else if (v + 1.0).abs() <= tol {
            signs.push(-1);
        } else {
            return Err(Error::NotThreshold(format!(
                "eigenvalue {v:.6} is not within {tol:.1e} of ±1"
            )));
        }
    }
    ProjectionPair::from_rotation(vecs, signs)
}
