use cfs_core::error::CfsError;
use cfs_core::kernel::RegKernelParams;
use cfs_core::quadrature::*;
use cfs_core::spinor::FourVector;

fn params(eps: f64) -> RegKernelParams {
    RegKernelParams::new(1.0, eps).unwrap()
}

#[test]
fn p4_converges_and_is_independent_of_base_point() {
    let cfg = QuadConfig::default();
    let reduced = integrate_reduced(IntegralKind::P4, params(0.1), &cfg).unwrap();
    let rep = &reduced.report;
    assert!(rep.value.is_finite() && rep.value > 0.0);
    assert!(rep.abs_error_estimate <= 0.5 * cfg.rel_tol * rep.value);
    assert!(rep.tail_bound <= 0.5 * cfg.rel_tol * rep.value);
    // Shrinking Cauchy differences under doubling of the domain.
    let vals: Vec<f64> = [40.0, 80.0, 160.0]
        .iter()
        .map(|&t| integrate_on_domain(IntegralKind::P4, params(0.1), &cfg, t, t).unwrap().report.value)
        .collect();
    let d1 = (vals[1] - vals[0]).abs();
    let d2 = (vals[2] - vals[1]).abs();
    assert!(d2 < d1 && d2 < 0.01 * vals[2]);
    // The full 4×4 evaluation at a shifted base point agrees with the reduction.
    let (mean, se) = monte_carlo_shifted(&reduced, FourVector::new(1.0, 2.0, 0.0, 0.0), 40_000, 3).unwrap();
    let combined = (se * se + rep.abs_error_estimate.powi(2)).sqrt();
    assert!((mean - rep.value).abs() <= 3.0 * combined, "mc {mean} +- {se} vs {}", rep.value);
}

#[test]
fn tail_bounds_are_sound() {
    let cfg = QuadConfig::default();
    for kind in [IntegralKind::P4, IntegralKind::Lagrangian] {
        let reps: Vec<QuadratureReport> = [40.0, 80.0, 160.0]
            .iter()
            .map(|&t| integrate_on_domain(kind, params(0.1), &cfg, t, t).unwrap().report)
            .collect();
        for w in reps.windows(2) {
            let change = w[1].value - w[0].value;
            assert!(
                change.abs() <= w[0].tail_bound + w[0].abs_error_estimate + w[1].abs_error_estimate,
                "{kind:?}: change {change:e} exceeds bound {:e}",
                w[0].tail_bound
            );
        }
    }
}

#[test]
fn lagrangian_integral_and_variations() {
    let cfg = QuadConfig::default();
    let l = integrate_lagrangian(params(0.1), &cfg).unwrap();
    assert!(l.value > 0.0 && l.value.is_finite());
    // ∫L ≤ 4∫|λ+|² + 4∫|λ−|².
    assert!(l.value <= 4.0 * (l.lambda_plus_sq + l.lambda_minus_sq));
    let e0 = ell_varied(0.0, params(0.1), &cfg).unwrap();
    let tol = l.abs_error_estimate + l.tail_bound + e0.abs_error_estimate + e0.tail_bound;
    assert!((e0.value - l.value).abs() <= tol);
    let doubled = ell_varied(0.1, params(0.1), &cfg).unwrap();
    assert!(doubled.value.is_finite() && (doubled.value - l.value).abs() > 10.0 * tol);
    assert!(ell_varied(-0.2, params(0.1), &cfg).is_err());
}

#[test]
fn p4_grows_as_regularization_shrinks() {
    let cfg = QuadConfig::default();
    let mut last = 0.0;
    for eps in [0.4, 0.2, 0.1] {
        let v = integrate_p4(params(eps), &cfg).unwrap().value;
        assert!(v > last, "eps = {eps}");
        last = v;
    }
}

#[test]
fn tolerance_halving_is_self_consistent() {
    let cfg = QuadConfig::default();
    let a = integrate_p4(params(0.2), &cfg).unwrap();
    let b = integrate_p4(params(0.2), &QuadConfig { rel_tol: 0.5 * cfg.rel_tol, ..cfg }).unwrap();
    assert!((a.value - b.value).abs() <= 2.0 * cfg.rel_tol * a.value);
}

#[test]
fn reports_are_reproducible() {
    let cfg = QuadConfig::default();
    let a = integrate_lagrangian(params(0.2), &cfg).unwrap();
    let b = integrate_lagrangian(params(0.2), &cfg).unwrap();
    assert!(a.same_numbers(&b));
}

#[test]
fn densities_are_rotation_invariant() {
    for kind in [IntegralKind::P4, IntegralKind::Lagrangian] {
        for (t, r) in [(0.5, 0.2), (2.0, 1.9), (1.0, 3.0)] {
            let a = density_along(kind, params(0.1), t, [1.0, 0.0, 0.0], r).unwrap();
            let b = density_along(kind, params(0.1), t, [0.3, -0.5, 0.8], r).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{kind:?} at ({t}, {r})");
        }
    }
}

#[test]
fn invalid_settings_are_rejected() {
    let cfg = QuadConfig::default();
    let bad = QuadConfig { rel_tol: 0.0, ..cfg };
    assert!(matches!(integrate_p4(params(0.1), &bad), Err(CfsError::InvalidParameter { .. })));
    let bad = QuadConfig { region_lambda: 0.4, ..cfg };
    assert!(integrate_p4(params(0.1), &bad).is_err());
    let tight = QuadConfig { t_max: 2.0, r_max: 2.0, max_doublings: 0, ..cfg };
    assert!(matches!(integrate_p4(params(0.1), &tight), Err(CfsError::NonConvergence(_))));
}
