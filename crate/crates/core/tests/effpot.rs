use thinfiber::effpot::{
    bound_states, compare_to_target, forward_scattering_matrix, BoundStateOptions, MatrixPotential,
};
use thinfiber::linalg::{c, CMat, I};

/// S of the well −V0 on [0, a] with a Dirichlet wall at 0.
fn well_s(v0: f64, a: f64, k: f64) -> num_complex::Complex64 {
    let q = (k * k + v0).sqrt();
    let (psi, dpsi) = ((q * a).sin(), q * (q * a).cos());
    let ik = I * k;
    (ik * psi + dpsi) / (ik * psi - dpsi) * (-2.0 * ik * a).exp()
}

/// Bound states −κ² of the same well: q cot(qa) = −κ with q² = V0 − κ².
fn well_bound_states(v0: f64, a: f64) -> Vec<f64> {
    let f = |kappa: f64| {
        let q = (v0 - kappa * kappa).max(0.0).sqrt();
        q * (q * a).cos() + kappa * (q * a).sin()
    };
    let n = 20000;
    let top = v0.sqrt();
    let mut out = Vec::new();
    for i in 0..n {
        let (mut lo, mut hi) = (top * i as f64 / n as f64, top * (i + 1) as f64 / n as f64);
        if i == 0 {
            lo = 1e-12;
        }
        if f(lo).signum() == f(hi).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(-(0.5 * (lo + hi)).powi(2));
    }
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn zero_potential_is_dirichlet_reflection() {
    for dim in 1..=3 {
        let v = MatrixPotential::zero(dim);
        for lambda in [0.3, 2.0, 17.0] {
            let s = forward_scattering_matrix(&v, 0.0, lambda).unwrap();
            assert!((&s + CMat::identity(dim, dim)).norm() == 0.0, "{s}");
        }
        assert!(bound_states(&v, 0.0, -10.0, &BoundStateOptions::default()).unwrap().states.is_empty());
    }
}

#[test]
fn scalar_well_phase_matches_closed_form() {
    let v = MatrixPotential::scalar_piecewise(vec![0.0, 1.5], &[-9.0]).unwrap();
    for lambda in [0.1, 1.0, 4.0, 25.0] {
        let s = forward_scattering_matrix(&v, 0.0, lambda).unwrap()[(0, 0)];
        let want = well_s(9.0, 1.5, lambda.sqrt());
        assert!((s - want).norm() < 1e-6, "λ = {lambda}: {s} vs {want}");
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn scalar_well_bound_states_match_closed_form() {
    let v = MatrixPotential::scalar_piecewise(vec![0.0, 1.5], &[-9.0]).unwrap();
    let want = well_bound_states(9.0, 1.5);
    let got = bound_states(&v, 0.0, -9.5, &BoundStateOptions::default()).unwrap();
    assert!(!got.floor_may_hide_states);
    assert_eq!(got.states.len(), want.len());
    for (g, w) in got.states.iter().zip(&want) {
        assert_eq!(g.multiplicity, 1);
        assert!((g.lambda - w).abs() < 1e-8, "{} vs {w}", g.lambda);
    }
}

#[test]
fn threshold_shift_moves_everything() {
    let v = MatrixPotential::scalar_piecewise(vec![0.0, 1.0], &[-4.0]).unwrap();
    let a = forward_scattering_matrix(&v, 0.0, 2.0).unwrap();
    let b = forward_scattering_matrix(&v, 3.0, 5.0).unwrap();
    assert!((a - b).norm() < 1e-14);
}

#[test]
fn decoupled_diagonal_potential_matches_scalar_blocks() {
    let m = CMat::from_row_slice(2, 2, &[c(-9.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
    let v = MatrixPotential::piecewise(vec![0.0, 1.5], vec![m]).unwrap();
    let s = forward_scattering_matrix(&v, 0.0, 1.0).unwrap();
    let s0 = forward_scattering_matrix(&MatrixPotential::scalar_piecewise(vec![0.0, 1.5], &[-9.0]).unwrap(), 0.0, 1.0).unwrap();
    let s1 = forward_scattering_matrix(&MatrixPotential::scalar_piecewise(vec![0.0, 1.5], &[2.0]).unwrap(), 0.0, 1.0).unwrap();
    assert!((s[(0, 0)] - s0[(0, 0)]).norm() < 1e-12 && (s[(1, 1)] - s1[(0, 0)]).norm() < 1e-12);
    assert!(s[(0, 1)].norm() < 1e-12);
}

#[test]
fn target_comparison_passes_for_own_data() {
    let v = MatrixPotential::scalar_piecewise(vec![0.0, 1.5], &[-9.0]).unwrap();
    let target: Vec<(f64, CMat)> = [0.5, 2.0, 6.0]
        .iter()
        .map(|&l| (l, CMat::from_element(1, 1, well_s(9.0, 1.5, f64::sqrt(l)))))
        .collect();
    let eigs = well_bound_states(9.0, 1.5);
    let rep = compare_to_target(&v, 0.0, &target, &eigs, -9.5, 1e-6).unwrap();
    assert!(rep.pass, "{rep:?}");
    let rep = compare_to_target(&MatrixPotential::zero(1), 0.0, &target, &eigs, -9.5, 1e-6).unwrap();
    assert!(!rep.pass && !rep.count_match);
}

#[test]
fn sampled_ramp_agrees_with_fine_staircase() {
    // V(t) = −6(1 − t) on [0, 1]: RK4 on the samples vs midpoint staircase.
    let ramp = MatrixPotential::sampled(
        vec![0.0, 1.0],
        vec![CMat::from_element(1, 1, c(-6.0, 0.0)), CMat::zeros(1, 1)],
        1e-12,
    )
    .unwrap();
    let n = 2000;
    let breaks: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let vals: Vec<f64> = (0..n).map(|k| -6.0 * (1.0 - (k as f64 + 0.5) / n as f64)).collect();
    let stair = MatrixPotential::scalar_piecewise(breaks, &vals).unwrap();
    for lambda in [0.5, 3.0] {
        let a = forward_scattering_matrix(&ramp, 0.0, lambda).unwrap();
        let b = forward_scattering_matrix(&stair, 0.0, lambda).unwrap();
        assert!((a - b).norm() < 1e-6);
    }
}
