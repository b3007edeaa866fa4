mod common;

use cfs_core::chain::*;
use cfs_core::kernel::*;
use cfs_core::quadrature::*;
use cfs_core::spinor::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn params(m: f64, eps: f64) -> RegKernelParams {
    RegKernelParams::new(m, eps).unwrap()
}

#[test]
fn coincidence_invariants_from_bessel_oracle() {
    // ξ = 0, m = 1, ε = 0.5: kernel regularization 2ε = 1, −ξ_ε² = 1.
    let one = Complex64::new(1.0, 0.0);
    let c = (2.0 * PI).powi(3);
    let g = common::k_integral(1, one).re / c;
    let f = common::k_integral(2, one).re / c;
    let b_oracle = 4.0 * f * f * g * g;
    let inv = chain_invariants(FourVector::ZERO, FourVector::ZERO, params(1.0, 0.5)).unwrap();
    assert!((inv.b - b_oracle).abs() < 1e-12 * b_oracle);
    assert!((inv.b - 1.0107e-9).abs() < 1e-12);
    assert_eq!(inv.classify(), CausalClass::Timelike);
    assert!((inv.lagrangian() - 4.0428e-9).abs() < 1e-12);
}

#[test]
fn far_spacelike_pair() {
    let inv = chain_invariants(FourVector::new(0.0, 5.0, 0.0, 0.0), FourVector::ZERO, params(1.0, 0.1)).unwrap();
    assert!(inv.b < 0.0);
    assert_eq!(inv.classify(), CausalClass::Spacelike);
    assert_eq!(inv.lagrangian(), 0.0);
}

#[test]
fn coincident_chain_is_square_of_kernel() {
    let p = params(1.0, 0.3);
    let x = FourVector::new(0.4, -1.0, 2.0, 0.5);
    let a = closed_chain(x, x, p).unwrap();
    let k = kernel_p(x, x, params(1.0, 0.6)).unwrap().matrix;
    assert!((a - k * k).max_abs() < 1e-15);
}

#[test]
fn region_and_bound_examples() {
    assert_eq!(region_classify(FourVector::new(2.0, 0.0, 0.0, 0.0), 0.8).unwrap(), RegionTag::C0);
    assert_eq!(region_classify(FourVector::new(0.5, 0.4, 0.0, 0.0), 0.8).unwrap(), RegionTag::C1Plus);
    assert_eq!(region_classify(FourVector::new(1.0, 10.0, 0.0, 0.0), 0.8).unwrap(), RegionTag::C2);
    let b = decay_lower_bound(FourVector::new(4.0, 4.0, 0.0, 0.0), 0.25, 0.8).unwrap();
    assert!((b - 0.6598).abs() < 1e-4 && b < exponent_closed_form(4.0, 4.0, 0.25));
    let b = decay_lower_bound(FourVector::new(1.0, 10.0, 0.0, 0.0), 0.1, 0.8).unwrap();
    assert!((b - 4.254).abs() < 1e-3 && b < exponent_closed_form(1.0, 10.0, 0.1));
    assert!(region_classify(FourVector::new(0.0, 1.0, 0.0, 0.0), 0.8).is_err());
    assert!(region_classify(FourVector::new(1.0, 0.0, 0.0, 0.0), 0.4).is_err());
}

fn point() -> impl Strategy<Value = FourVector> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(FourVector)
}

/// Principal square root by Newton iteration from the polar form; used as
/// an oracle for the real part of `sqrt(−ξ_ε²)`.
fn newton_sqrt(w: Complex64) -> Complex64 {
    let mut s = Complex64::from_polar(w.norm().sqrt(), 0.5 * w.arg());
    for _ in 0..4 {
        s = (s + w / s) * 0.5;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_eigenvalues(x in point(), y in point(), m in 0.5f64..2.0, eps in 0.05f64..0.5) {
        let p = params(m, eps);
        let inv = chain_invariants(x, y, p).unwrap();
        let a = closed_chain(x, y, p).unwrap();
        let ev = generic_eigenvalues(&a).unwrap();
        let scale = inv.lambda_plus.norm().max(inv.lambda_minus.norm());
        let mut counts = [0; 2];
        for e in &ev {
            let d = [(e - inv.lambda_plus).norm(), (e - inv.lambda_minus).norm()];
            let k = usize::from(d[1] < d[0]);
            counts[k] += 1;
            prop_assert!(d[k] <= 1e-8 * scale);
        }
        if (inv.lambda_plus - inv.lambda_minus).norm() > 1e-6 * scale {
            prop_assert_eq!(counts, [2, 2]);
        }
        // Trace and spin self-adjointness of the closed chain.
        prop_assert!((a.trace() - (inv.lambda_plus + inv.lambda_minus) * 2.0).norm() <= 1e-12 * scale);
        prop_assert!((spin_adjoint(&a) - a).max_abs() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn lagrangian_identities(x in point(), y in point(), m in 0.5f64..2.0, eps in 0.05f64..0.5) {
        let inv = chain_invariants(x, y, params(m, eps)).unwrap();
        let a2 = inv.a * inv.a;
        prop_assert!(inv.b <= a2 * (1.0 + 1e-12));
        prop_assert!((inv.lagrangian() - inv.lagrangian_from_eigenvalues()).abs() <= 1e-8 * a2);
        if inv.classify() == CausalClass::Spacelike {
            prop_assert_eq!(inv.lagrangian(), 0.0);
        }
    }

    #[test]
    fn mixed_chain_reduces_to_closed_chain(x in point(), y in point(), eps in 0.05f64..0.5) {
        let mixed = mixed_chain(x, y, eps, eps, 1.0).unwrap();
        let closed = closed_chain(x, y, params(1.0, eps)).unwrap() * (4.0 * PI * PI);
        prop_assert!((mixed - closed).max_abs() <= 1e-13 * closed.max_abs());
        let near = mixed_chain(x, y, eps, eps * (1.0 + 1e-7), 1.0).unwrap();
        prop_assert!((near - closed).max_abs() <= 1e-5 * closed.max_abs());
    }

    #[test]
    fn exponent_identity(t in -30.0f64..30.0, r in 0.0f64..30.0, le in -3.0f64..0.0) {
        let eps = 10f64.powf(le);
        let w = Complex64::new(r * r - t * t + eps * eps, -2.0 * eps * t);
        let u = exponent_closed_form(t, r, eps);
        prop_assert!(u > 0.0);
        let s = newton_sqrt(w);
        prop_assert!((u - s.re).abs() <= 1e-12 * s.norm());
        let v = w.im / (2.0 * u);
        prop_assert!((u * u - v * v - w.re).abs() <= 1e-12 * w.norm());
    }

    #[test]
    fn lower_bound_below_exponent_c1minus(t in 1.0f64..50.0, f in 0.0f64..1.0, lambda in 0.55f64..0.95, le in -3.0f64..0.0) {
        let eps = 10f64.powf(le);
        let r = t + f * (t / lambda - t);
        let xi = FourVector::new(t, 0.0, 0.0, r);
        let bound = decay_lower_bound(xi, eps, lambda).unwrap();
        prop_assert!(bound <= exponent_closed_form(t, r, eps));
    }

    #[test]
    fn lower_bound_below_exponent_c2(t in 1e-3f64..50.0, extra in 1e-9f64..50.0, lambda in 0.55f64..0.95, le in -3.0f64..0.0) {
        let eps = 10f64.powf(le);
        let r = t / lambda + extra;
        let xi = FourVector::new(-t, r, 0.0, 0.0);
        prop_assert_eq!(region_classify(xi, lambda).unwrap(), RegionTag::C2);
        let bound = decay_lower_bound(xi, eps, lambda).unwrap();
        prop_assert!(bound <= exponent_closed_form(t, r, eps));
    }
}
