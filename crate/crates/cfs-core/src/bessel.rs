//! Modified Bessel functions `K_0`, `K_1`, `K_2` of complex argument on the
//! cut plane, and the ordinary Bessel function `J_1` on the half line.
//!
//! `K_0` and `K_1` are computed together. For `|z| <= 2` the ascending
//! series is used. For `2 < |z| <= 16` the code runs Steed's continued
//! fraction for the confluent hypergeometric ratio (Temme's CF2). Close to
//! the negative real axis it uses the analytic-continuation formula instead.
//! For `|z| > 16` the large-argument expansion is used with optimal
//! truncation. `K_2` always comes from the forward recurrence.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{CfsError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 16.0;
const CF_MAX_ITER: usize = 20_000;

/// A point of the plane slit along the non-positive real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPlanePoint(Complex64);

impl CutPlanePoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(CfsError::Domain(format!("non-finite argument {value}")));
        }
        if value.im == 0.0 && value.re <= 0.0 {
            return Err(CfsError::Domain(format!(
                "argument {value} lies on the cut (-inf, 0]"
            )));
        }
        Ok(Self(value))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    #[inline]
    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// `K_n(z)` for `n` in `{0, 1, 2}`.
pub fn bessel_k(n: u32, z: CutPlanePoint) -> Result<Complex64> {
    let [k0, k1, k2] = bessel_k012(z);
    match n {
        0 => Ok(k0),
        1 => Ok(k1),
        2 => Ok(k2),
        _ => Err(CfsError::Domain(format!("order {n} not supported (0, 1, 2 only)"))),
    }
}

/// `K_n'(z)`; only `n = 1` is provided, via `K_1' = -(K_0 + K_2)/2`.
pub fn bessel_k_derivative(n: u32, z: CutPlanePoint) -> Result<Complex64> {
    if n != 1 {
        return Err(CfsError::Domain(format!("derivative of order {n} not supported")));
    }
    let [k0, _, k2] = bessel_k012(z);
    Ok(-(k0 + k2) * 0.5)
}

/// `[K_0(z), K_1(z), K_2(z)]` in one pass.
pub fn bessel_k012(z: CutPlanePoint) -> [Complex64; 3] {
    let z = z.value();
    let (k0, k1) = k01(z);
    [k0, k1, k0 + k1 * 2.0 / z]
}

fn k01(z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        k01_series(z)
    } else if r > ASYMPTOTIC_RADIUS {
        (k_asymptotic(0, z), k_asymptotic(1, z))
    } else if z.re < 0.0 && z.im.abs() < 0.25 * r {
        k01_reflected(z)
    } else {
        k01_continued_fraction(z).unwrap_or_else(|| k01_reflected(z))
    }
}

fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let y = z * z * 0.25;
    let log_half = (z * 0.5).ln();

    // K0 = -(ln(z/2) + gamma) I0 + sum_{k>=1} H_k y^k / (k!)^2
    let mut term = Complex64::new(1.0, 0.0); // y^k/(k!)^2
    let mut i0 = term;
    let mut tail0 = Complex64::new(0.0, 0.0);
    let mut harmonic = 0.0;
    // K1 pieces: I1 = (z/2) sum y^k/(k!(k+1)!), and the digamma sum.
    let mut term1 = Complex64::new(1.0, 0.0); // y^k/(k!(k+1)!)
    let mut s1 = term1;
    let mut psi_sum = term1 * (2.0 * (-EULER_GAMMA) + 1.0);
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail0 += term * harmonic;

        term1 *= y / (kf * (kf + 1.0));
        s1 += term1;
        let psi = 2.0 * (-EULER_GAMMA + harmonic) + 1.0 / (kf + 1.0);
        psi_sum += term1 * psi;

        if term.norm() < 1e-18 * i0.norm() && term1.norm() < 1e-18 * s1.norm() {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + tail0;
    let i1 = z * 0.5 * s1;
    let k1 = z.inv() + log_half * i1 - z * 0.25 * psi_sum;
    (k0, k1)
}

/// Steed's algorithm for Temme's second continued fraction at order zero.
/// Returns `None` when the fraction fails to settle.
fn k01_continued_fraction(x: Complex64) -> Option<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + x) * 2.0;
    let mut d = b.inv();
    let mut delh = d;
    let mut h = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = Complex64::new(a1, 0.0);
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 1..CF_MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -c * a / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged || !s.re.is_finite() {
        return None;
    }
    let h = h * a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    Some((k0, k1))
}

/// `K_n(z) = (-1)^n K_n(w) -+ i pi I_n(w)` with `w = -z` in the right
/// half-plane; the sign follows the side of the cut.
fn k01_reflected(z: Complex64) -> (Complex64, Complex64) {
    let w = -z;
    let (kw0, kw1) = if w.norm() > ASYMPTOTIC_RADIUS {
        (k_asymptotic(0, w), k_asymptotic(1, w))
    } else {
        k01_continued_fraction(w).unwrap_or_else(|| k01_series(w))
    };
    let (i0, i1) = i01_series(w);
    let ipi = Complex64::new(0.0, PI);
    let sign = if z.im > 0.0 { -1.0 } else { 1.0 };
    (kw0 + ipi * i0 * sign, -kw1 + ipi * i1 * sign)
}

fn i01_series(w: Complex64) -> (Complex64, Complex64) {
    let y = w * w * 0.25;
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = Complex64::new(1.0, 0.0);
    let mut s0 = t0;
    let mut s1 = t1;
    for k in 1..400 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        t1 *= y / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.norm() < 1e-18 * s0.norm() && t1.norm() < 1e-18 * s1.norm() {
            break;
        }
    }
    (s0, s1 * w * 0.5)
}

/// Large-argument expansion `sqrt(pi/2z) e^{-z} sum a_k(n) / z^k`, summed
/// up to the smallest term (never fewer than eight corrections).
fn k_asymptotic(n: u32, z: Complex64) -> Complex64 {
    let mu = 4.0 * (n * n) as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * z);
        let size = next.norm();
        if k > 8 && size >= last {
            break;
        }
        term = next;
        sum += term;
        last = size;
        if size < 1e-18 * sum.norm() && k >= 8 {
            break;
        }
    }
    (PI / (2.0 * z)).sqrt() * (-z).exp() * sum
}

/// `J_1(x)` for `x >= 0`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(CfsError::Domain(format!("J1 requires finite x >= 0, got {x}")));
    }
    Ok(j1_unchecked(x))
}

/// `J_1(x)/x`, continuously extended by `1/2` at the origin.
pub fn bessel_j1_over_x(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(CfsError::Domain(format!("J1(x)/x requires finite x >= 0, got {x}")));
    }
    if x < 8.0 {
        Ok(j1_series_over_x(x))
    } else {
        Ok(j1_unchecked(x) / x)
    }
}

fn j1_unchecked(x: f64) -> f64 {
    if x < 8.0 {
        x * j1_series_over_x(x)
    } else {
        j1_trapezoid(x)
    }
}

/// `sum (-1)^k (x/2)^{2k} / (2 k! (k+1)!)`.
fn j1_series_over_x(x: f64) -> f64 {
    let y = -0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    for k in 1..100 {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Bessel's integral `J_1(x) = (1/2pi) int_0^{2pi} cos(t - x sin t) dt`.
/// The integrand is periodic and entire, so the trapezoid rule converges
/// geometrically once the node count exceeds `x`.
fn j1_trapezoid(x: f64) -> f64 {
    let n = (x.ceil() as usize + 64).next_multiple_of(4);
    let h = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        let t = j as f64 * h;
        sum += (t - x * t.sin()).cos();
    }
    sum / n as f64
}

/// Real part of the principal square root, `sqrt((|z| + Re z)/2)`.
///
/// For `Re z < 0` the radicand is rewritten as `(Im z)²/(2(|z| − Re z))`,
/// which is algebraically identical and free of cancellation.
#[inline]
pub fn re_sqrt(z: Complex64) -> f64 {
    let n = z.norm();
    let half = if z.re >= 0.0 {
        0.5 * (n + z.re)
    } else {
        0.5 * z.im * z.im / (n - z.re)
    };
    half.sqrt()
}

/// `true` if `z` lies in the sector `|arg z| < alpha`.
pub fn in_sector(z: Complex64, alpha: f64) -> bool {
    z != Complex64::new(0.0, 0.0) && z.arg().abs() < alpha
}

/// Half-plane sector used by the accuracy contract.
pub const RIGHT_HALF_PLANE: f64 = FRAC_PI_2;
