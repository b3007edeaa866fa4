mod common;

use cfs_core::bessel::CutPlanePoint;
use cfs_core::kernel::*;
use cfs_core::spinor::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn params(m: f64, eps: f64) -> RegKernelParams {
    RegKernelParams::new(m, eps).unwrap()
}

fn fd4(f: impl Fn(FourVector) -> SpinorMatrix, xi: FourVector, j: usize, h: f64) -> SpinorMatrix {
    let at = |s: f64| {
        let mut v = xi;
        v.0[j] += s * h;
        f(v)
    };
    (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) * (1.0 / (12.0 * h))
}

#[test]
fn scalar_functions_from_bessel_oracle() {
    let two_pi_cubed = (2.0 * PI).powi(3);
    let one = Complex64::new(1.0, 0.0);
    let k1 = common::k_integral(1, one).re;
    let k2 = common::k_integral(2, one).re;
    let z = CutPlanePoint::real(1.0).unwrap();
    let g = scalar_g(z, 1.0).unwrap();
    let f = scalar_f(z, 1.0).unwrap();
    assert!((g.re - k1 / two_pi_cubed).abs() < 1e-14 && g.im.abs() < 1e-16);
    assert!((f.im - k2 / two_pi_cubed).abs() < 1e-14 && f.re.abs() < 1e-16);
    assert!((g.re - 2.42655e-3).abs() < 1e-8);
    assert!((f.im - 6.55045e-3).abs() < 1e-8);
}

#[test]
fn scalar_f_is_derivative_of_scalar_g() {
    for (z, m) in [(0.3, 1.0), (1.0, 1.0), (2.5, 0.7), (4.0, 1.8)] {
        let g = |s: f64| scalar_g(CutPlanePoint::real(s).unwrap(), m).unwrap();
        let h = 1e-4 * z;
        let dg = (g(z - 2.0 * h) - g(z + 2.0 * h) + (g(z + h) - g(z - h)) * 8.0) / (12.0 * h);
        let f = scalar_f(CutPlanePoint::real(z).unwrap(), m).unwrap();
        let expected = dg * 2.0 / (I * m);
        assert!((f - expected).norm() < 1e-6 * f.norm(), "z = {z}, m = {m}");
        // Positive reals give a purely imaginary F with positive imaginary part.
        assert!(f.im > 0.0 && f.re == 0.0);
    }
}

#[test]
fn coincidence_matrix_and_nu() {
    let p = kernel_p(FourVector::ZERO, FourVector::ZERO, params(1.0, 1.0)).unwrap().matrix;
    let expected = [-4.1239e-3, -4.1239e-3, 8.9770e-3, 8.9770e-3];
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { expected[i] } else { 0.0 };
            assert!((p.0[i][j] - target).norm() < 1e-7, "entry ({i},{j}) = {}", p.0[i][j]);
        }
    }
    let (num, nup) = nu_pm(params(1.0, 0.5)).unwrap();
    assert!((num + 2.5911e-2).abs() < 1e-6 && (nup - 5.6404e-2).abs() < 1e-6);
    let mut last = (0.0, 0.0);
    for eps in [1.0, 0.5, 0.25] {
        let (a, b) = nu_pm(params(1.0, eps)).unwrap();
        assert!(a.abs() > last.0 && b.abs() > last.1);
        last = (a.abs(), b.abs());
    }
}

#[test]
fn momentum_oracle_examples() {
    for (xi, p) in [
        (FourVector::ZERO, params(1.0, 1.0)),
        (FourVector::new(0.5, 0.3, 0.0, 0.0), params(1.0, 0.2)),
        (FourVector::new(0.1, 2.0, 0.0, 0.0), params(1.0, 0.1)),
    ] {
        let (oracle, err) = kernel_p_momentum_oracle(xi, FourVector::ZERO, p, OracleSettings::default()).unwrap();
        let closed = kernel_p_xi(xi, p).unwrap().matrix;
        assert!((oracle - closed).max_abs() < 1e-6, "xi = {:?}", xi.0);
        assert!((oracle - closed).max_abs() < 1e-10 * closed.max_abs().max(1.0));
        assert!(err < 1e-8);
    }
}

#[test]
fn decay_along_rays() {
    let p = params(1.0, 0.1);
    for dir in [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.5), (0.5, 1.0)] {
        let mut last = f64::INFINITY;
        for s in [2.0, 4.0, 8.0, 16.0, 32.0] {
            let xi = FourVector::new(s * dir.0, s * dir.1, 0.0, 0.0);
            let n = kernel_p_xi(xi, p).unwrap().spectral_norm();
            assert!(n < last, "no decay along {dir:?} at s = {s}");
            last = n;
        }
    }
}

fn point() -> impl Strategy<Value = FourVector> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(FourVector)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_symmetry(x in point(), y in point(), m in 0.5f64..2.0, eps in 0.05f64..1.0) {
        let p = params(m, eps);
        let pxy = kernel_p(x, y, p).unwrap().matrix;
        let pyx = kernel_p(y, x, p).unwrap().matrix;
        prop_assert!((spin_adjoint(&pxy) - pyx).max_abs() <= 1e-13 * pxy.max_abs());
    }

    #[test]
    fn dirac_equation(xi in point(), m in 0.5f64..2.0, eps in 0.1f64..1.0) {
        let p = params(m, eps);
        let pm = |y: FourVector| kernel_p_xi(y, p).unwrap().matrix;
        let base = pm(xi);
        let mut res = base * (-m);
        for j in 0..4 {
            res += SpinorMatrix::gamma(j) * fd4(pm, xi, j, 1e-3) * I;
        }
        prop_assert!(spectral_norm(&res) <= 1e-4 * spectral_norm(&base));
    }

    #[test]
    fn vector_part_is_gradient_of_scalar(xi in point(), m in 0.5f64..2.0, eps in 0.1f64..1.0) {
        let p = params(m, eps);
        let k = kernel_p_xi(xi, p).unwrap();
        let v = k.v();
        let scale = v.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for j in 0..4 {
            let h = 1e-3;
            let g = |s: f64| { let mut y = xi; y.0[j] += s * h; kernel_p_xi(y, p).unwrap().g };
            let d = (g(-2.0) - g(2.0) + (g(1.0) - g(-1.0)) * 8.0) / (12.0 * h) * METRIC[j];
            prop_assert!((v.0[j] - d * I / m).norm() <= 1e-5 * scale);
        }
    }

    #[test]
    fn spectral_norm_closed_form(xi in point(), m in 0.5f64..2.0, eps in 0.05f64..1.0) {
        let k = kernel_p_xi(xi, params(m, eps)).unwrap();
        let numeric = spectral_norm(&k.matrix);
        prop_assert!((k.spectral_norm() - numeric).abs() <= 1e-10 * numeric);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn momentum_oracle_agreement(xi in point(), m in 0.5f64..2.0, eps in 0.1f64..0.5) {
        let p = params(m, eps);
        let (oracle, _) = kernel_p_momentum_oracle(xi, FourVector::ZERO, p, OracleSettings::default()).unwrap();
        let closed = kernel_p_xi(xi, p).unwrap().matrix;
        prop_assert!((oracle - closed).max_abs() < 1e-6);
    }
}
