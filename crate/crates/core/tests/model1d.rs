use thinfiber::conditions::{scattering_matrix_of_condition, threshold_projection, SNAP_TOL_ANALYTIC};
use thinfiber::linalg::{c, CMat};
use thinfiber::model1d::{
    classify_gc, resolvent_1d, scattering_1d, scattering_kappa, threshold_matrix, tune_two_step,
    GcClass, Potential1D, Resolvent1dConfig,
};

#[test]
fn square_barrier_transmission_matches_closed_form() {
    // Height 4 on [−1, 1], κ = 1 below the barrier top.
    let t = scattering_kappa(&Potential1D::constant(4.0), c(1.0, 0.0));
    let q = 3f64.sqrt();
    let want = 1.0 / (1.0 + 16.0 * (2.0 * q).sinh().powi(2) / 12.0);
    assert!((t[(0, 1)].norm_sqr() - want).abs() < 1e-12);
    let above = scattering_kappa(&Potential1D::constant(4.0), c(3.0, 0.0));
    let k2: f64 = 9.0;
    let qa = (k2 - 4.0).sqrt();
    let want = 1.0 / (1.0 + 16.0 * (2.0 * qa).sin().powi(2) / (4.0 * k2 * (k2 - 4.0)));
    assert!((above[(0, 1)].norm_sqr() - want).abs() < 1e-12);
}

#[test]
fn scaling_maps_lambda_to_kappa() {
    let v = Potential1D::new(vec![1.0, -2.0, 3.5]).unwrap();
    let a = scattering_1d(&v, 0.05, c(400.0, 0.0)).unwrap();
    let b = scattering_kappa(&v, c(1.0, 0.0));
    assert!((a - b).norm() < 1e-13);
}

#[test]
fn classification_trichotomy() {
    let zero = classify_gc(&Potential1D::zero()).unwrap();
    assert_eq!(
        zero.class,
        GcClass::GeneralizedKirchhoff {
            rho_minus: 1.0,
            rho_plus: 1.0
        }
    );
    assert_eq!(classify_gc(&Potential1D::constant(4.0)).unwrap().class, GcClass::DirichletGeneric);
    let v = tune_two_step(-1.0).unwrap();
    match classify_gc(&v).unwrap().class {
        GcClass::GeneralizedKirchhoff {
            rho_minus,
            rho_plus,
        } => {
            assert!((rho_minus * rho_plus - 1.0).abs() < 1e-9);
            assert!((rho_minus - rho_plus).abs() > 0.1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn low_energy_limit_matches_classified_condition() {
    for v in [Potential1D::zero(), Potential1D::constant(4.0), tune_two_step(-1.0).unwrap()] {
        let cls = classify_gc(&v).unwrap();
        let t_small = scattering_kappa(&v, c(1e-2, 0.0));
        let gc = scattering_matrix_of_condition(&cls.limit_condition(), 2, c(1.0, 0.0), 0.0).unwrap();
        assert!((t_small - &gc).norm() < 1e-1 && (threshold_matrix(&v) - &gc).norm() < 1e-9);
    }
}

#[test]
fn threshold_of_generic_barrier_snaps_to_dirichlet() {
    let p = threshold_projection(&threshold_matrix(&Potential1D::constant(4.0)), SNAP_TOL_ANALYTIC)
        .unwrap();
    assert_eq!(p.rank, 2);
    let free = threshold_projection(&threshold_matrix(&Potential1D::zero()), SNAP_TOL_ANALYTIC).unwrap();
    assert_eq!(free.rank, 1);
    let ones = CMat::from_element(2, 1, c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let pc = thinfiber::linalg::to_complex(&free.complement());
    assert!((&pc * &ones - &ones).norm() < 1e-12);
}

#[test]
fn free_line_resolvent_is_outgoing() {
    // (−d² − λ)u = f on the free line; compare with −∫G₀f for G₀ = e^{ik|x|}/(2ik).
    let v = Potential1D::zero();
    let lambda = c(4.0, 1.0);
    let k = lambda.sqrt();
    let f = |x: f64| {
        if (0.5..1.5).contains(&x) {
            c((std::f64::consts::PI * (x - 0.5)).sin().powi(2), 0.0)
        } else {
            c(0.0, 0.0)
        }
    };
    let sol = resolvent_1d(&v, 0.1, lambda, &f, (0.5, 1.5), &Resolvent1dConfig::default()).unwrap();
    assert!(sol.residual < 1e-10);
    let mid = sol.u.len() / 2;
    let x = sol.x(mid);
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut acc = c(0.0, 0.0);
    for j in 0..=n {
        let s = 0.5 + j as f64 * h;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        acc += f(s) * (thinfiber::linalg::I * k * (x - s).abs()).exp() * w * h;
    }
    let want = -acc / (2.0 * thinfiber::linalg::I * k);
    assert!((sol.u[mid] - want).norm() < 2e-3 * want.norm(), "{} vs {}", sol.u[mid], want);
}
