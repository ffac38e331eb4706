use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinfiber::conditions::VertexCondition;
use thinfiber::graph::{half_line, star_graph, EdgeLength};
use thinfiber::linalg::{c, I};
use thinfiber::solver::{green_function, resolvent_apply, GraphFunction, GraphPoint};

#[test]
fn line_green_function_is_closed_form() {
    // Two half-lines glued by Kirchhoff form the real line.
    let g = star_graph(2, &[EdgeLength::Infinite, EdgeLength::Infinite])
        .unwrap()
        .with_condition(0, VertexCondition::Kirchhoff)
        .unwrap();
    let mu = c(3.0, 0.5);
    let z = mu.sqrt();
    let src = GraphPoint::new(1, 0.7);
    let gf = green_function(&g, mu, 0.0, src).unwrap();
    for (edge, t) in [(0usize, 0.4), (1, 0.1), (1, 2.5), (0, 3.0)] {
        let x = if edge == 0 { -t } else { t };
        let want = (I * z * (x - 0.7f64).abs()).exp() / (2.0 * I * z);
        assert!((gf.eval(GraphPoint::new(edge, t)) - want).norm() < 1e-10);
    }
}

#[test]
fn half_line_green_functions_are_closed_form() {
    let mu = c(2.0, 0.3);
    let z = mu.sqrt();
    let t0 = 1.1;
    for (cond, sign) in [(VertexCondition::Dirichlet, -1.0), (VertexCondition::Neumann, 1.0)] {
        let g = half_line(cond).unwrap();
        let gf = green_function(&g, mu, 0.0, GraphPoint::new(0, t0)).unwrap();
        for t in [0.2, 1.1, 3.7] {
            let want = ((I * z * (t - t0).abs()).exp() + sign * (I * z * (t + t0)).exp())
                / (2.0 * I * z);
            assert!((gf.eval(GraphPoint::new(0, t)) - want).norm() < 1e-10);
        }
    }
}

fn star3(cond: VertexCondition) -> thinfiber::graph::MetricGraph {
    star_graph(3, &[EdgeLength::Finite(1.0), EdgeLength::Infinite, EdgeLength::Finite(0.8)])
        .unwrap()
        .with_condition(0, cond)
        .unwrap()
        .with_end_conditions(VertexCondition::Dirichlet)
        .unwrap()
}

/// ρ(q)G(q, p) = ρ(p)G(p, q) on 20 random pairs.
fn check_weighted_symmetry(cond: VertexCondition, rho: [f64; 3]) {
    let g = star3(cond);
    let lens = [1.0, 3.0, 0.8];
    let mu = c(5.0, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut pick = || {
            let e = rng.gen_range(0..3usize);
            GraphPoint::new(e, rng.gen_range(0.05..0.95) * lens[e])
        };
        let (p, q) = (pick(), pick());
        let a = green_function(&g, mu, 0.0, q).unwrap().eval(p) * rho[p.edge];
        let b = green_function(&g, mu, 0.0, p).unwrap().eval(q) * rho[q.edge];
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn green_function_is_symmetric_on_random_pairs() {
    check_weighted_symmetry(VertexCondition::Kirchhoff, [1.0; 3]);
}

#[test]
fn generalized_kirchhoff_green_function_is_weighted_symmetric() {
    let rho = [1.0, 2.0, 0.5];
    check_weighted_symmetry(VertexCondition::generalized_kirchhoff(rho.to_vec()).unwrap(), rho);
}

#[test]
fn derivative_jumps_by_one_at_the_source() {
    let g = star_graph(2, &[EdgeLength::Finite(1.2), EdgeLength::Finite(0.9)])
        .unwrap()
        .with_condition(0, VertexCondition::Kirchhoff)
        .unwrap()
        .with_end_conditions(VertexCondition::Neumann)
        .unwrap();
    let src = GraphPoint::new(0, 0.5);
    let gf = green_function(&g, c(4.0, 0.2), 0.0, src).unwrap();
    let jump = gf.derivative(src, 1.0) - gf.derivative(src, -1.0);
    assert!((jump - c(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn source_on_a_vertex_is_rejected() {
    let g = half_line(VertexCondition::Dirichlet).unwrap();
    assert!(green_function(&g, c(1.0, 0.1), 0.0, GraphPoint::new(0, 0.0)).is_err());
}

#[test]
fn resolvent_matches_quadrature_of_green_function() {
    let g = half_line(VertexCondition::Dirichlet).unwrap();
    let mu = c(1.5, 0.4);
    let z = mu.sqrt();
    let fb = thinfiber::model1d::bump(0.0, 2.0);
    let f = GraphFunction::from_fn(&g, 2001, 2.0, |_, t| c(fb(t), 0.0));
    let u = resolvent_apply(&g, mu, 0.0, &f).unwrap();
    let exact = |t: f64| -> Complex64 {
        let iz = I * z;
        let inner = |s: f64| fb(s) * ((iz * (t - s).abs()).exp() - (iz * (t + s)).exp()) / (2.0 * iz);
        let n = 4000;
        let h = 2.0 / n as f64;
        let mut acc = inner(0.0) + inner(2.0);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * inner(k as f64 * h);
        }
        acc * (h / 3.0)
    };
    for t in [0.3, 1.0, 2.6] {
        assert!((u.eval(0, t) - exact(t)).norm() < 1e-5, "t = {t}");
    }
}
