// Arguments just inside ±π probe the branch cut on purpose.
#![allow(clippy::approx_constant)]

mod common;

use cfs_core::bessel::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn k(n: u32, z: Complex64) -> Complex64 {
    bessel_k(n, CutPlanePoint::new(z).unwrap()).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn values_at_one_match_integral_representation() {
    for n in 0..3 {
        let oracle = common::k_integral(n, Complex64::new(1.0, 0.0));
        assert!(rel(k(n, Complex64::new(1.0, 0.0)), oracle) < 1e-12, "n = {n}");
    }
    // Reference digits for K1(1) and K2(1) = K0(1) + 2 K1(1).
    let k1 = common::k_integral(1, Complex64::new(1.0, 0.0)).re;
    let k2 = common::k_integral(2, Complex64::new(1.0, 0.0)).re;
    assert!((k1 - 0.6019072302).abs() < 1e-10);
    assert!((k2 - 1.6248388986).abs() < 1e-10);
}

#[test]
fn whole_cut_plane_matches_oracle() {
    let mut worst: f64 = 0.0;
    for i in 0..60 {
        let r = 1e-3 * (60.0f64 / 1e-3).powf(i as f64 / 59.0);
        for arg in [-3.1415, -3.1, -2.5, -1.6, -1.5, -0.7, 0.0, 0.4, 1.2, 1.57, 2.0, 2.8, 3.14, 3.1415] {
            let z = Complex64::from_polar(r, arg);
            for n in 0..2 {
                worst = worst.max(rel(k(n, z), common::k_oracle(n, z)));
            }
            let k2 = common::k_oracle(0, z) + common::k_oracle(1, z) * 2.0 / z;
            worst = worst.max(rel(k(2, z), k2));
        }
    }
    assert!(worst < 1e-11, "worst relative deviation {worst:e}");
}

#[test]
fn large_argument_envelope() {
    // K1(10) is within 5% of sqrt(pi/20) e^{-10}.
    let v = k(1, Complex64::new(10.0, 0.0)).re;
    let lead = (PI / 20.0).sqrt() * (-10.0f64).exp();
    assert!((v / lead - 1.0).abs() < 0.05);
    assert!((lead - 1.800e-5).abs() < 1e-8);
}

#[test]
fn small_argument_law() {
    let v = k(1, Complex64::new(1e-3, 0.0)).re;
    assert!((v / 1000.0 - 1.0).abs() < 1e-3);
}

#[test]
fn derivative_examples() {
    let d = bessel_k_derivative(1, CutPlanePoint::real(1.0).unwrap()).unwrap();
    assert!((d.re + 1.0229316684).abs() < 1e-9 && d.im.abs() < 1e-15);
    for z in [Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)] {
        let h = 1e-6;
        let fd = (k(1, z + h) - k(1, z - h)) / (2.0 * h);
        let d = bessel_k_derivative(1, CutPlanePoint::new(z).unwrap()).unwrap();
        assert!(rel(d, fd) < 1e-6, "z = {z}");
    }
}

#[test]
fn unsupported_orders_and_cut_are_rejected() {
    assert!(bessel_k(3, CutPlanePoint::real(1.0).unwrap()).is_err());
    assert!(CutPlanePoint::new(Complex64::new(-1.0, 0.0)).is_err());
    assert!(CutPlanePoint::new(Complex64::new(0.0, 0.0)).is_err());
    assert!(bessel_k_derivative(0, CutPlanePoint::real(1.0).unwrap()).is_err());
}

#[test]
fn j1_against_series() {
    for i in 0..=40 {
        let x = 0.25 * i as f64;
        assert!((bessel_j1(x).unwrap() - common::j1_series(x)).abs() < 1e-12, "x = {x}");
    }
    assert!(bessel_j1(3.8317059702).unwrap().abs() < 1e-8);
    assert!((bessel_j1(1.0).unwrap() - 0.4400505857).abs() < 1e-10);
    assert!((bessel_j1_over_x(0.0).unwrap() - 0.5).abs() < 1e-15);
}

fn cut_plane() -> impl Strategy<Value = Complex64> {
    ((-3.0f64..1.7), (-3.14f64..3.14)).prop_map(|(lr, arg)| Complex64::from_polar(10f64.powf(lr), arg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn recurrence_holds(z in cut_plane()) {
        let (k0, k1, k2) = (k(0, z), k(1, z), k(2, z));
        prop_assert!((k2 - k0 - k1 * 2.0 / z).norm() <= 1e-10 * k2.norm());
    }

    #[test]
    fn conjugation_symmetry(z in cut_plane()) {
        for n in 0..3 {
            prop_assert!((k(n, z.conj()) - k(n, z).conj()).norm() <= 1e-13 * k(n, z).norm());
        }
    }

    #[test]
    fn derivative_matches_differences(z in cut_plane()) {
        let h = 1e-5 * z.norm().min(if z.re < 0.0 { z.im.abs() } else { z.norm() }).max(1e-12);
        let fd = (k(1, z + h) - k(1, z - h)) / (2.0 * h);
        let d = bessel_k_derivative(1, CutPlanePoint::new(z).unwrap()).unwrap();
        prop_assert!(rel(d, fd) < 1e-6, "z = {}, d = {}, fd = {}", z, d, fd);
    }

    #[test]
    fn right_half_plane_matches_integral(lr in -2.0f64..1.5, arg in -1.4f64..1.4) {
        let z = Complex64::from_polar(10f64.powf(lr), arg);
        for n in 0..3 {
            prop_assert!(rel(k(n, z), common::k_integral(n, z)) < 1e-11);
        }
    }
}
