use nalgebra::DMatrix;
use proptest::prelude::*;
use thinfiber::conditions::{
    scattering_matrix_of_condition, ProjectionPair, ScatteringMatrixFn, VertexCondition,
};
use thinfiber::graph::{half_line, star_graph, EdgeLength, EdgeSpec, MetricGraph};
use thinfiber::linalg::{c, unitary_symmetric_defects, CMat, RMat};
use thinfiber::model1d::{scattering_1d, Potential1D};
use thinfiber::solver::scattering_matrix;

fn infinite_star(d: usize, cond: VertexCondition) -> MetricGraph {
    star_graph(d, &vec![EdgeLength::Infinite; d])
        .unwrap()
        .with_condition(0, cond)
        .unwrap()
}

#[test]
fn kirchhoff_star_is_two_over_d_minus_identity() {
    for d in 2..=5 {
        let t = scattering_matrix(&infinite_star(d, VertexCondition::Kirchhoff), c(2.3, 0.0), 0.0)
            .unwrap();
        for p in 0..d {
            for j in 0..d {
                let want = 2.0 / d as f64 - if p == j { 1.0 } else { 0.0 };
                assert!((t[(p, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn half_line_reflections() {
    for (cond, r) in [(VertexCondition::Dirichlet, -1.0), (VertexCondition::Neumann, 1.0)] {
        let t = scattering_matrix(&half_line(cond).unwrap(), c(1.7, 0.0), 0.0).unwrap();
        assert!((t[(0, 0)] - c(r, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn graph_with_compact_part_is_unitary_and_symmetric() {
    // Two leads joined through a triangle of finite edges, one with a
    // dangling Neumann edge.
    let e = |a, b: Option<usize>, l: f64| EdgeSpec {
        start: a,
        finish: b,
        length: if b.is_some() { EdgeLength::Finite(l) } else { EdgeLength::Infinite },
    };
    let g = MetricGraph::new(
        vec![0, 1, 2, 3],
        vec![
            e(0, Some(1), 1.0),
            e(1, Some(2), 0.7),
            e(2, Some(0), 1.3),
            e(0, None, 0.0),
            e(2, None, 0.0),
            e(1, Some(3), 0.45),
        ],
        vec![
            Some(VertexCondition::Kirchhoff),
            Some(VertexCondition::Kirchhoff),
            Some(VertexCondition::Kirchhoff),
            Some(VertexCondition::Neumann),
        ],
    )
    .unwrap();
    for mu in [0.5, 3.0, 11.0, 27.0] {
        let t = scattering_matrix(&g, c(mu, 0.0), 0.0).unwrap();
        let (u, s) = unitary_symmetric_defects(&t);
        assert!(u < 1e-10 && s < 1e-10, "μ = {mu}: {u:e} {s:e}");
    }
}

#[test]
fn star_of_a_scattering_condition_returns_its_matrix() {
    let t0 = CMat::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)]);
    let f = ScatteringMatrixFn::constant(t0.clone(), 0.0, 100.0, 1e-12).unwrap();
    let t = scattering_matrix(&infinite_star(2, VertexCondition::Scattering(f)), c(4.0, 0.0), 1.0)
        .unwrap();
    assert!((t - t0).norm() < 1e-12);
}

#[test]
fn dirichlet_projection_reflects_totally() {
    let p = ProjectionPair::from_projection(&RMat::identity(3, 3)).unwrap();
    let t = scattering_matrix_of_condition(&VertexCondition::Projection(p), 3, c(2.0, 0.0), 0.0)
        .unwrap();
    assert!((t + CMat::identity(3, 3)).norm() < 1e-12);
}

fn rotation(angles: &[f64], d: usize) -> RMat {
    let mut q = RMat::identity(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            let (s, co) = angles[k % angles.len()].sin_cos();
            k += 1;
            let mut g = RMat::identity(d, d);
            g[(i, i)] = co;
            g[(j, j)] = co;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            q = q * g;
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn generalized_kirchhoff_is_unitary_symmetric(
        rho in prop::collection::vec(0.1f64..5.0, 2..6),
        mu in 0.01f64..80.0,
    ) {
        let d = rho.len();
        let cond = VertexCondition::generalized_kirchhoff(rho).unwrap();
        let t = scattering_matrix_of_condition(&cond, d, c(mu, 0.0), 0.0).unwrap();
        let (u, s) = unitary_symmetric_defects(&t);
        prop_assert!(u <= 1e-10 && s <= 1e-10, "{u:e} {s:e}");
        let g = scattering_matrix(&infinite_star(d, cond), c(mu, 0.0), 0.0).unwrap();
        prop_assert!((g - t).norm() < 1e-10);
    }

    #[test]
    fn projection_conditions_are_unitary_symmetric(
        angles in prop::collection::vec(-3.0f64..3.0, 1..7),
        signs in prop::collection::vec(prop::bool::ANY, 4),
        mu in 0.01f64..80.0,
    ) {
        let d = 4;
        let r = rotation(&angles, d);
        let s: Vec<i8> = signs.iter().map(|&b| if b { 1 } else { -1 }).collect();
        let cond = VertexCondition::Projection(ProjectionPair::from_rotation(r, s).unwrap());
        let t = scattering_matrix_of_condition(&cond, d, c(mu, 0.0), 0.0).unwrap();
        let (u, sy) = unitary_symmetric_defects(&t);
        prop_assert!(u <= 1e-10 && sy <= 1e-10, "{u:e} {sy:e}");
    }

    #[test]
    fn thin_potential_matrices_are_unitary_symmetric(
        values in prop::collection::vec(-6.0f64..12.0, 1..9),
        eps in 0.01f64..0.5,
        lambda in 0.1f64..200.0,
    ) {
        let v = Potential1D::new(values).unwrap();
        let t = scattering_1d(&v, eps, c(lambda, 0.0)).unwrap();
        let (u, s) = unitary_symmetric_defects(&t);
        prop_assert!(u <= 1e-10 && s <= 1e-10, "{u:e} {s:e}");
    }

    #[test]
    fn kirchhoff_matrix_is_energy_independent(mu in 0.01f64..100.0, d in 2usize..6) {
        let t = scattering_matrix_of_condition(&VertexCondition::Kirchhoff, d, c(mu, 0.0), 0.0).unwrap();
        let want = DMatrix::from_fn(d, d, |p, j| c(2.0 / d as f64 - if p == j { 1.0 } else { 0.0 }, 0.0));
        prop_assert!((t - want).norm() < 1e-12);
    }
}
