use crate::error::{Error, Result};
use crate::linalg::{sym_eigen_sorted, RMat};
use serde::{Deserialize, Serialize};

/// Wall condition on the cross-section ends (and on the waveguide walls).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WallBc {
    Dirichlet,
    Neumann,
    /// ∂ₙu + αu = 0 with α > 0.
    Robin { alpha: f64 },
}

impl WallBc {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WallBc::Robin { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::invalid(format!("Robin coefficient must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn drops_boundary(&self) -> bool {
        matches!(self, WallBc::Dirichlet)
    }
}

/// Interval (0, 1) with `cells` grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionProblem {
    pub wall: WallBc,
    pub cells: usize,
}

impl CrossSectionProblem {
    pub fn new(wall: WallBc, cells: usize) -> Result<Self> {
        wall.validate()?;
        if cells < 2 {
            return Err(Error::invalid("cross-section needs at least two cells"));
        }
        Ok(CrossSectionProblem { wall, cells })
    }

    pub fn with_step(wall: WallBc, h: f64) -> Result<Self> {
        let n = (1.0 / h).round();
        if !(h > 0.0) || ((n * h) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("grid step {h} does not divide the unit interval")));
        }
        Self::new(wall, n as usize)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }
}

/// Discrete mode: λ and φ on all nodes y_k = k·h (zero at Dirichlet ends),
/// normalized in the lumped L² product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub lambda: f64,
    pub phi: Vec<f64>,
}

/// Lumped stiffness/mass of the cross-section on the active nodes.
/// Returns (first active node, stiffness, mass diagonal).
pub(crate) fn cross_section_system(p: &CrossSectionProblem) -> (usize, RMat, Vec<f64>) {
    let n = p.cells;
    let h = p.h();
    let mut k = RMat::zeros(n + 1, n + 1);
    let mut m = vec![0.0; n + 1];
    for s in 0..n {
        k[(s, s)] += 1.0 / h;
        k[(s + 1, s + 1)] += 1.0 / h;
        k[(s, s + 1)] -= 1.0 / h;
        k[(s + 1, s)] -= 1.0 / h;
        m[s] += 0.5 * h;
        m[s + 1] += 0.5 * h;
    }
    if let WallBc::Robin { alpha } = p.wall {
        k[(0, 0)] += alpha;
        k[(n, n)] += alpha;
    }
    if p.wall.drops_boundary() {
        let k = k.view((1, 1), (n - 1, n - 1)).into_owned();
        (1, k, m[1..n].to_vec())
    } else {
        (0, k, m)
    }
}

/// Lowest `count` modes of the lumped second-order scheme.
pub(crate) fn discrete_modes(p: &CrossSectionProblem, count: usize) -> Vec<Mode> {
    let (first, k, m) = cross_section_system(p);
    let na = m.len();
    let s = RMat::from_fn(na, na, |i, j| k[(i, j)] / (m[i] * m[j]).sqrt());
    let (vals, vecs) = sym_eigen_sorted(&s);
    (0..count.min(na))
        .map(|q| {
            let mut phi = vec![0.0; p.cells + 1];
            for i in 0..na {
                phi[first + i] = vecs[(i, q)] / m[i].sqrt();
            }
            let big = phi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let lead = phi.iter().copied().find(|x| x.abs() > 1e-8 * big).unwrap_or(1.0);
            if lead < 0.0 {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
            Mode {
                lambda: vals[q],
                phi,
            }
        })
        .collect()
}

/// Modes 0..=n_max. Each requested mode must have at least ten grid cells
/// per half-wave.
pub fn cross_section_modes(p: &CrossSectionProblem, n_max: usize) -> Result<Vec<Mode>> {
    p.wall.validate()?;
    let need = 10 * (n_max + 1);
    if p.cells < need {
        return Err(Error::invalid(format!(
            "{} cells cannot resolve mode {n_max}; need at least {need}",
            p.cells
        )));
    }
    Ok(discrete_modes(p, n_max + 1))
}

/// Eigenvalues of −d²/dx² on (0, l) with the lumped scheme on `cells` cells.
fn interval_eigenvalues(l: f64, ends: WallBc, cells: usize) -> Vec<f64> {
    let p = CrossSectionProblem {
        wall: match ends {
            WallBc::Robin { alpha } => WallBc::Robin { alpha: alpha * l },
            w => w,
        },
        cells,
    };
    discrete_modes(&p, cells + 1)
        .into_iter()
        .map(|m| m.lambda / (l * l))
        .collect()
}

/// Lowest `count` eigenvalues of −ε²Δ on (0, l)×(0, ε). `h` is the step in
/// the unit cross-section; the longitudinal grid uses the same step on (0, l).
pub fn cylinder_spectrum_fd(
    l: f64,
    eps: f64,
    walls: WallBc,
    ends: WallBc,
    h: f64,
    count: usize,
) -> Result<Vec<f64>> {
    walls.validate()?;
    ends.validate()?;
    if !(l > 0.0) || !(eps > 0.0) || count == 0 {
        return Err(Error::invalid("need l > 0, ε > 0 and count ≥ 1"));
    }
    let ny = (1.0 / h).round() as usize;
    let nx = (l / h).round() as usize;
    if ny < 10 || nx < 10 {
        return Err(Error::invalid(format!("grid step {h} under-resolves the cylinder")));
    }
    let ty = interval_eigenvalues(1.0, walls, ny);
    let tx = interval_eigenvalues(l, ends, nx);
    let mut all: Vec<f64> = ty
        .iter()
        .flat_map(|&a| tx.iter().map(move |&b| a + eps * eps * b))
        .collect();
    all.sort_by(f64::total_cmp);
    if all.len() < count {
        return Err(Error::invalid("grid has fewer eigenvalues than requested"));
    }
    all.truncate(count);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_ground_mode() {
        let p = CrossSectionProblem::new(WallBc::Dirichlet, 64).unwrap();
        let m = cross_section_modes(&p, 1).unwrap();
        let exact = |n: f64| 4.0 * 64.0 * 64.0 * (n * PI / 128.0).sin().powi(2);
        assert!((m[0].lambda - exact(1.0)).abs() < 1e-9);
        assert!((m[1].lambda - exact(2.0)).abs() < 1e-8);
        assert!((m[0].phi[32] - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn neumann_ground_mode_is_constant() {
        let p = CrossSectionProblem::new(WallBc::Neumann, 20).unwrap();
        let m = cross_section_modes(&p, 0).unwrap();
        assert!(m[0].lambda.abs() < 1e-10);
        assert!(m[0].phi.iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn under_resolved_request_fails() {
        let p = CrossSectionProblem::new(WallBc::Dirichlet, 20).unwrap();
        assert!(cross_section_modes(&p, 2).is_err());
    }
}
