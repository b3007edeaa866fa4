#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// `K_n(z) = int_0^inf exp(-z cosh t) cosh(n t) dt` for `Re z > 0`, by the
/// trapezoid rule (geometrically convergent for this analytic integrand).
pub fn k_integral(n: u32, z: Complex64) -> Complex64 {
    assert!(z.re > 0.0);
    let d = std::f64::consts::FRAC_PI_2 - z.arg().abs();
    let h = (d / 7.0).min(0.04);
    let t_max = (745.0 / z.re).max(1.0).acosh() + 1.0;
    let steps = (t_max / h).ceil() as usize;
    let mut sum = 0.5 * (-z).exp();
    for j in 1..=steps {
        let t = j as f64 * h;
        sum += (-z * t.cosh()).exp() * (n as f64 * t).cosh();
    }
    sum * h
}

/// `I_n(w) = (1/pi) int_0^pi exp(w cos t) cos(n t) dt` by the periodic
/// trapezoid rule.
pub fn i_integral(n: u32, w: Complex64) -> Complex64 {
    let m = (w.norm().ceil() as usize + 80) * 2;
    let h = 2.0 * PI / m as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let t = j as f64 * h;
        sum += (w * t.cos()).exp() * (n as f64 * t).cos();
    }
    sum / m as f64
}

/// Oracle on the whole cut plane: direct integral in the right half-plane,
/// analytic continuation through `I_n` in the left one.
pub fn k_oracle(n: u32, z: Complex64) -> Complex64 {
    if z.re > 0.0 {
        return k_integral(n, z);
    }
    let w = -z;
    let sign = if z.im > 0.0 { -1.0 } else { 1.0 };
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    k_integral(n, w) * parity + Complex64::new(0.0, PI * sign) * i_integral(n, w)
}

/// Series `sum (-1)^k (x/2)^{2k+1} / (k! (k+1)!)`, accurate for moderate x.
pub fn j1_series(x: f64) -> f64 {
    let mut term = x / 2.0;
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -(x * x / 4.0) / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-20 {
            break;
        }
    }
    sum
}
