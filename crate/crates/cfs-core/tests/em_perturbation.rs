mod common;

use cfs_core::em_perturb::*;
use cfs_core::integrate::gauss_legendre;
use cfs_core::kernel::RegKernelParams;
use cfs_core::spinor::*;
use std::f64::consts::PI;

fn ball() -> SupportBall {
    SupportBall::new(FourVector::new(1.0, 0.0, 0.0, 0.0), 0.5).unwrap()
}

fn scalar_bump(b: SupportBall) -> impl Fn(FourVector) -> f64 {
    move |y| {
        let d = y - b.center;
        bump((0..4).map(|k| d.0[k] * d.0[k]).sum::<f64>().sqrt() / b.radius)
    }
}

/// Composite Gauss rule on `[a, b]` with `panels` panels of `n` nodes.
fn composite(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + p as f64 * h;
            x.iter().zip(&w).map(move |(xi, wi)| (lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi)).collect::<Vec<_>>()
        })
        .collect()
}

/// Directions on the sphere with weights, polar axis along `axis`.
fn sphere(panels: usize, n_phi: usize, axis: [f64; 3]) -> Vec<([f64; 3], f64)> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let a = if n > 0.0 { axis.map(|c| c / n) } else { [0.0, 0.0, 1.0] };
    let h = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = h[0] * a[0] + h[1] * a[1] + h[2] * a[2];
    let e1 = [h[0] - d * a[0], h[1] - d * a[1], h[2] - d * a[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = e1.map(|c| c / n1);
    let e2 = [a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]];
    let mut out = Vec::new();
    for (th, wt) in composite(0.0, PI, panels, 8) {
        let (s, c) = th.sin_cos();
        let wc = wt * s;
        for k in 0..n_phi {
            let ph = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
            let (u, v) = (s * ph.cos(), s * ph.sin());
            let dir = std::array::from_fn(|i| c * a[i] + u * e1[i] + v * e2[i]);
            out.push((dir, wc * 2.0 * PI / n_phi as f64));
        }
    }
    out
}

fn toward_support(x: FourVector, b: SupportBall) -> [f64; 3] {
    [x.0[1] - b.center.0[1], x.0[2] - b.center.0[2], x.0[3] - b.center.0[3]]
}

/// `∫φ(x⁰ − |ξ⃗|, x⃗ − ξ⃗)/(2|ξ⃗|) d³ξ` in spherical coordinates about `x`.
fn surface_oracle(x: FourVector, phi: &impl Fn(FourVector) -> f64, b: SupportBall) -> f64 {
    let lo = (x.t() - b.center.t() - b.radius).max(0.0);
    let hi = x.t() - b.center.t() + b.radius;
    let dirs = sphere(32, 64, toward_support(x, b));
    let mut acc = 0.0;
    for (r, wr) in composite(lo, hi, 96, 8) {
        for (n, wn) in &dirs {
            let y = FourVector::new(x.t() - r, x.0[1] - r * n[0], x.0[2] - r * n[1], x.0[3] - r * n[2]);
            acc += wr * wn * r / 2.0 * phi(y);
        }
    }
    acc
}

/// `∫_{ξ⁰ > |ξ⃗|} J₁(m√ξ²)/(m√ξ²)·φ(x − ξ) d⁴ξ` with `J₁` from its power series.
fn volume_oracle(x: FourVector, phi: &impl Fn(FourVector) -> f64, b: SupportBall, m: f64) -> f64 {
    let lo = (x.t() - b.center.t() - b.radius).max(0.0);
    let hi = x.t() - b.center.t() + b.radius;
    let dirs = sphere(8, 32, toward_support(x, b));
    let mut acc = 0.0;
    for (t, wt) in composite(lo, hi, 24, 8) {
        for (r, wr) in composite(0.0, t, 24, 8) {
            let s = m * (t * t - r * r).sqrt();
            let j = if s > 0.0 { common::j1_series(s) / s } else { 0.5 };
            for (n, wn) in &dirs {
                let y = FourVector::new(x.t() - t, x.0[1] - r * n[0], x.0[2] - r * n[1], x.0[3] - r * n[2]);
                acc += wt * wr * wn * r * r * j * phi(y);
            }
        }
    }
    acc
}

#[test]
fn volume_kernel_values() {
    let gp = GreenParams::new(0.7, 3.0, 0.01).unwrap();
    let v = green_volume_part(FourVector::new(2.0, 0.0, 0.0, 0.0), 1.0, &gp);
    let expected = 3.0 * common::j1_series(2.0) / 2.0;
    assert!((v - expected).abs() < 1e-12);
    assert!((common::j1_series(2.0) - 0.5767).abs() < 1e-4);
    assert_eq!(green_volume_part(FourVector::new(0.5, 1.0, 0.0, 0.0), 1.0, &gp), 0.0);
    assert_eq!(green_volume_part(FourVector::new(-2.0, 0.0, 0.0, 0.0), 1.0, &gp), 0.0);
    // Continuous extension on the cone.
    assert!((green_volume_part(FourVector::new(1.0, 1.0, 0.0, 0.0), 1.0, &gp) - 1.5).abs() < 1e-15);
    let near = green_volume_part(FourVector::new(1.0 + 1e-9, 1.0, 0.0, 0.0), 1.0, &gp);
    assert!((near - 1.5).abs() < 1e-6);
}

#[test]
fn convolution_parts_match_direct_quadrature() {
    let b = ball();
    let phi = scalar_bump(b);
    let g = |y: FourVector| {
        let v = phi(y);
        (v != 0.0).then(|| SpinorMatrix::identity() * v)
    };
    for x in [FourVector::new(1.0, 0.0, 0.0, 0.0), FourVector::new(1.6, 0.2, 0.1, 0.0), FourVector::new(2.0, 0.0, 0.0, 0.5)] {
        let parts = convolution_parts(x, &g, &b, 1.0, &ConvolutionRule::fine()).unwrap();
        let s = surface_oracle(x, &phi, b);
        let v = volume_oracle(x, &phi, b, 1.0);
        assert!(s > 0.0 && v > 0.0);
        assert!((parts.surface[(0, 0)].re - s).abs() <= 1e-6 * s, "surface at {:?}: {} vs {s}", x.0, parts.surface[(0, 0)].re);
        assert!((parts.volume[(0, 0)].re - v).abs() <= 1e-6 * v, "volume at {:?}: {} vs {v}", x.0, parts.volume[(0, 0)].re);
        assert!(parts.surface[(1, 0)].norm() == 0.0 && parts.volume[(2, 3)].norm() == 0.0);
    }
}

#[test]
fn heavier_mass_damps_volume_part() {
    let b = ball();
    let phi = scalar_bump(b);
    let g = |y: FourVector| {
        let v = phi(y);
        (v != 0.0).then(|| SpinorMatrix::identity() * v)
    };
    let x = FourVector::new(1.6, 0.2, 0.1, 0.0);
    let ratio = |m: f64| {
        let p = convolution_parts(x, &g, &b, m, &ConvolutionRule::coarse()).unwrap();
        p.volume[(0, 0)].norm() / p.surface[(0, 0)].norm()
    };
    assert!(ratio(5.0) < ratio(1.0));
}

#[test]
fn convolution_is_linear_and_retarded() {
    let b = ball();
    let phi = scalar_bump(b);
    let g1 = |y: FourVector| {
        let v = phi(y);
        (v != 0.0).then(|| SpinorMatrix::gamma(1) * v)
    };
    let g2 = |y: FourVector| {
        let v = phi(y);
        (v != 0.0).then(|| SpinorMatrix::identity() * (v * y.t()))
    };
    let sum = |y: FourVector| match (g1(y), g2(y)) {
        (Some(a), Some(c)) => Some(a + c),
        _ => None,
    };
    let gp = GreenParams::new(0.8, -0.3, 0.01).unwrap();
    let rule = ConvolutionRule::coarse();
    let x = FourVector::new(2.0, 0.3, -0.2, 0.1);
    let a = convolve_s(x, &g1, &b, 1.0, &gp, &rule).unwrap();
    let c = convolve_s(x, &g2, &b, 1.0, &gp, &rule).unwrap();
    let s = convolve_s(x, &sum, &b, 1.0, &gp, &rule).unwrap();
    assert!((s - (a + c)).max_abs() <= 1e-10 * s.max_abs());
    // Points whose past cone misses the support.
    for x in [FourVector::new(0.0, 0.0, 0.0, 0.0), FourVector::new(1.0, 2.0, 0.0, 0.0), FourVector::new(1.5, 0.0, 1.5, 0.0)] {
        assert!(b.causal_margin(x) < 0.0);
        assert_eq!(convolve_s(x, &sum, &b, 1.0, &gp, &rule).unwrap().max_abs(), 0.0);
    }
    assert!(convolution_parts(x, &g1, &b, 0.0, &rule).is_err());
    let bad = ConvolutionRule { n_time: 1, ..rule };
    assert!(convolution_parts(x, &g1, &b, 1.0, &bad).is_err());
}

fn setup() -> EmSetup {
    EmSetup {
        params: RegKernelParams::new(1.0, 0.1).unwrap(),
        green: GreenParams::new(0.08, -0.04, DEFAULT_FD_STEP).unwrap(),
        rule: ConvolutionRule::coarse(),
    }
}

#[test]
fn first_order_wave_functions() {
    let pot = Potential::default_test();
    let s = setup();
    let x = FourVector::new(1.3, 0.2, 0.0, 0.1);
    let one = psi1_matrix(x, FourVector::ZERO, &pot, &s).unwrap();
    let two = psi1_matrix(x, FourVector::ZERO, &pot.scaled(2.0), &s).unwrap();
    assert!(one.max_abs() > 0.0);
    assert!((two - one * 2.0).max_abs() <= 1e-10 * one.max_abs());
    let col = psi1_on_frame(x, FourVector::ZERO, 2, &pot, &s).unwrap();
    assert_eq!(col, one.column(2));
    assert!(psi1_on_frame(x, FourVector::ZERO, 4, &pot, &s).is_err());
    let silent = Potential::new([0.0, 0.0, 0.0, 1.0], 0.0, pot.support, 0.0).unwrap();
    assert_eq!(psi1_matrix(x, FourVector::ZERO, &silent, &s).unwrap().max_abs(), 0.0);
    let outside = FourVector::new(0.2, 1.5, 0.0, 0.0);
    assert!(pot.support.causal_margin(outside) < 0.0);
    assert_eq!(psi1_matrix(outside, FourVector::ZERO, &pot, &s).unwrap().max_abs(), 0.0);
}

#[test]
fn potentials_respect_initial_time() {
    let b = SupportBall::new(FourVector::new(0.4, 0.0, 0.0, 0.0), 0.5).unwrap();
    assert!(Potential::new([1.0, 0.0, 0.0, 0.0], 1.0, b, 0.0).is_err());
    assert!(Potential::new([1.0, 0.0, 0.0, 0.0], 1.0, b, -1.0).is_ok());
    let pot = Potential::default_test();
    assert!(pot.slashed(FourVector::new(1.0, 0.6, 0.0, 0.0)).is_none());
    assert_eq!(pot.value(pot.support.center), [0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn f1_matrix_elements() {
    let pot = Potential::default_test();
    let s = setup();
    let z = FourVector::ZERO;
    let z2 = FourVector::new(0.0, 0.4, 0.0, 0.2);
    let x = FourVector::new(1.2, 0.1, 0.0, 0.0);
    let block = f1_block(x, z, &pot, &s).unwrap();
    assert!(block.max_abs() > 0.0);
    assert!((block.adjoint() - block).max_abs() <= 1e-14 * block.max_abs());
    for (mu, nu) in [(0, 2), (1, 3), (2, 2)] {
        let e = f1_matrix_element(x, (z, mu), (z, nu), &pot, &s).unwrap();
        assert!((e - block[(mu, nu)]).norm() <= 1e-14 * block.max_abs());
    }
    for (mu, nu) in [(0, 1), (2, 3), (1, 2)] {
        let a = f1_matrix_element(x, (z, mu), (z2, nu), &pot, &s).unwrap();
        let b = f1_matrix_element(x, (z2, nu), (z, mu), &pot, &s).unwrap();
        assert!((a - b.conj()).norm() <= 1e-12 * block.max_abs());
    }
    let doubled = f1_block(x, z, &pot.scaled(2.0), &s).unwrap();
    assert!((doubled - block * 2.0).max_abs() <= 1e-10 * block.max_abs());
    for x in [FourVector::new(0.3, 0.0, 0.0, 0.0), FourVector::new(1.0, 0.0, 2.0, 0.0), FourVector::new(2.0, 2.0, 1.0, 0.0)] {
        assert!(pot.support.causal_margin(x) < 0.0);
        assert_eq!(f1_block(x, z2, &pot, &s).unwrap().max_abs(), 0.0);
    }
    assert!(f1_matrix_element(x, (z, 4), (z, 0), &pot, &s).is_err());
}

#[test]
fn calibration_meets_cauchy_identity() {
    let params = RegKernelParams::new(1.0, 0.1).unwrap();
    let pot = Potential::default_test();
    let grid = default_calibration_grid(&pot);
    let rule = ConvolutionRule::coarse();
    let cal = calibrate_green(params, &pot, FourVector::ZERO, &grid, DEFAULT_FD_STEP, &rule).unwrap();
    assert!(cal.relative_residual <= 1e-3, "residual {:e}", cal.relative_residual);
    let s = EmSetup { params, green: cal.green, rule };
    let again = cauchy_residual(&pot, FourVector::ZERO, &grid, &s).unwrap();
    assert!((again - cal.relative_residual).abs() <= 1e-12);
    let doubled = EmSetup {
        green: GreenParams::new(2.0 * cal.green.alpha, cal.green.beta, cal.green.mollifier_width).unwrap(),
        ..s
    };
    let worse = cauchy_residual(&pot, FourVector::ZERO, &grid, &doubled).unwrap();
    assert!(worse >= 10.0 * cal.relative_residual);
    // The grid must see the source somewhere.
    let far = vec![FourVector::new(-3.0, 0.0, 0.0, 0.0)];
    assert!(calibrate_green(params, &pot, FourVector::ZERO, &far, DEFAULT_FD_STEP, &rule).is_err());
    assert!(calibrate_green(params, &pot, FourVector::ZERO, &grid, 0.0, &rule).is_err());
}
