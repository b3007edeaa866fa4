//! Integrals over ℝ⁴ of kernel- and chain-derived densities.
//!
//! Every integrand depends only on `t = ξ⁰` and `r = |ξ⃗|` and is even in
//! `t`, so `∫_{ℝ⁴} f d⁴ξ = 2∫_0^∞ dt ∫_0^∞ 4πr² f(t, r) dr`. The truncated
//! box `[0,T]×[0,R]` is split along the light cone `t = r` into a timelike
//! and a spacelike piece, each mapped to a rectangle whose edge carries the
//! light-cone ridge, and integrated with adaptive tensor Gauss–Kronrod
//! (15/7) panels. The complement of the box is bounded by integrating a
//! calibrated Bessel envelope of `|P|₂⁴`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bessel::{bessel_k, re_sqrt, CutPlanePoint};
use crate::chain::{chain_ab, chain_invariants};
use crate::error::{invalid, require_positive, CfsError, Result};
use crate::integrate::{adaptive_gk, gk15_nodes};
use crate::kernel::{block_spectral_norm, kernel_p, kernel_p_xi, RegKernelParams, TWO_PI_CUBED};
use crate::spinor::{spectral_norm, ComplexFourVector, FourVector};

/// Region of the decomposition of `{ξ⁰ ≠ 0}` used in the decay estimates,
/// classified by `t = |ξ⁰|` and `r = |ξ⃗|` for a parameter `λ ∈ (1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionTag {
    /// `t ≥ 1`, `r ≤ √(t² − t^{2λ})` (deep timelike).
    C0,
    /// `r ≤ t` outside `C0` (timelike side of the light cone).
    C1Plus,
    /// `t ≤ r ≤ t/λ` (spacelike side of the light cone).
    C1Minus,
    /// `r ≥ t/λ` (far spacelike).
    C2,
}

impl RegionTag {
    pub const ALL: [RegionTag; 4] = [RegionTag::C0, RegionTag::C1Plus, RegionTag::C1Minus, RegionTag::C2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::C0 => "C0",
            RegionTag::C1Plus => "C1plus",
            RegionTag::C1Minus => "C1minus",
            RegionTag::C2 => "C2",
        }
    }
}

fn check_region_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.5 && lambda < 1.0 {
        Ok(())
    } else {
        Err(invalid("region_lambda", format!("must lie in (1/2, 1), got {lambda}")))
    }
}

fn classify_tr(t: f64, r: f64, lambda: f64) -> RegionTag {
    if t >= 1.0 && r <= (t * t - t.powf(2.0 * lambda)).max(0.0).sqrt() {
        RegionTag::C0
    } else if r <= t {
        RegionTag::C1Plus
    } else if r <= t / lambda {
        RegionTag::C1Minus
    } else {
        RegionTag::C2
    }
}

/// Region of `ξ` (boundaries resolved in the order C0, C1plus, C1minus, C2).
pub fn region_classify(xi: FourVector, lambda: f64) -> Result<RegionTag> {
    check_region_lambda(lambda)?;
    if xi.t() == 0.0 || !xi.is_finite() {
        return Err(CfsError::Domain(format!(
            "region classification needs finite xi with xi0 != 0, got {:?}",
            xi.0
        )));
    }
    Ok(classify_tr(xi.t().abs(), xi.spatial_norm(), lambda))
}

/// Closed form of `Re √(−ξ_ε²) = √((|−ξ_ε²| + Re(−ξ_ε²))/2)` with
/// `−ξ_ε² = (r² − t² + ε²) − 2iεt`, evaluated without cancellation.
pub fn exponent_closed_form(t: f64, r: f64, eps: f64) -> f64 {
    let re = r * r - t * t + eps * eps;
    let im2 = 4.0 * eps * eps * t * t;
    let modulus = (re * re + im2).sqrt();
    let half = if re >= 0.0 {
        0.5 * (modulus + re)
    } else {
        0.5 * im2 / (modulus - re)
    };
    half.sqrt()
}

/// Explicit lower bound for `Re √(−ξ_ε²)`:
/// `√ε·t^{1−λ}` on `C1minus` with `t ≥ 1`, and
/// `2^{−1/2}·√(2εt + (1−λ²)r²)` on `C2`.
pub fn decay_lower_bound(xi: FourVector, eps: f64, lambda: f64) -> Result<f64> {
    require_positive("epsilon", eps)?;
    // Validates λ and ξ⁰ ≠ 0.
    region_classify(xi, lambda)?;
    let (t, r) = (xi.t().abs(), xi.spatial_norm());
    // Membership is tested on the closed sets, so boundary points shared
    // with C1plus (r = t) still receive the C1minus bound.
    if r > t / lambda {
        Ok(std::f64::consts::FRAC_1_SQRT_2 * (2.0 * eps * t + (1.0 - lambda * lambda) * r * r).sqrt())
    } else if r >= t && t >= 1.0 {
        Ok(eps.sqrt() * t.powf(1.0 - lambda))
    } else {
        let tag = classify_tr(t, r, lambda);
        Err(CfsError::Domain(format!(
            "no explicit decay bound in region {} (t = {t}, r = {r}); use adaptive evaluation",
            tag.name()
        )))
    }
}

/// Which density is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralKind {
    /// `|P^{2ε}(0, ξ)|₂⁴`.
    P4,
    /// `L^ε(0, ξ) = 4|b|₊` (plus `|λ±|²` accumulators).
    Lagrangian,
    /// Lagrangian of the chain with effective regularization `2ε + λ_var`.
    Ell { lambda_var: f64 },
    /// `|P^{2ε}(0, ξ)𝔢_μ|⁴` for one spinor column `μ`.
    P4Column { mu: usize },
}

impl IntegralKind {
    pub fn name(&self) -> &'static str {
        match self {
            IntegralKind::P4 => "p4",
            IntegralKind::Lagrangian => "lagrangian",
            IntegralKind::Ell { .. } => "ell",
            IntegralKind::P4Column { .. } => "p4_column",
        }
    }

    /// Regularization of the kernel entering the density.
    pub fn effective_eps(&self, eps: f64) -> f64 {
        match self {
            IntegralKind::P4 | IntegralKind::Lagrangian | IntegralKind::P4Column { .. } => 2.0 * eps,
            IntegralKind::Ell { lambda_var } => 2.0 * eps + lambda_var,
        }
    }

    pub fn lambda_var(&self) -> f64 {
        match self {
            IntegralKind::Ell { lambda_var } => *lambda_var,
            _ => 0.0,
        }
    }
}

/// Numerical settings of the ℝ⁴ integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Relative target, split evenly between interior error and tail bound.
    pub rel_tol: f64,
    /// Region parameter `λ ∈ (1/2, 1)` for bookkeeping.
    pub region_lambda: f64,
    /// Initial time truncation `T`.
    pub t_max: f64,
    /// Initial spatial truncation `R`.
    pub r_max: f64,
    /// Panel budget of the interior quadrature.
    pub max_panels: usize,
    /// Number of domain doublings allowed to push the tail bound below
    /// its share of the tolerance.
    pub max_doublings: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            region_lambda: 0.85,
            t_max: 40.0,
            r_max: 40.0,
            max_panels: 400_000,
            max_doublings: 6,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("quad_rel_tol", self.rel_tol)?;
        require_positive("truncation_T", self.t_max)?;
        require_positive("truncation_R", self.r_max)?;
        check_region_lambda(self.region_lambda)?;
        if self.max_panels < 16 {
            return Err(invalid("quad_max_panels", "must be at least 16"));
        }
        Ok(())
    }
}

/// Result of an ℝ⁴ integral.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureReport {
    pub name: String,
    pub m: f64,
    pub epsilon: f64,
    pub lambda_region: f64,
    pub lambda_var: f64,
    /// Integral over the truncated domain.
    pub value: f64,
    /// Interior quadrature error estimate.
    pub abs_error_estimate: f64,
    /// `max(T, R)`.
    pub truncation_radius: f64,
    pub t_max: f64,
    pub r_max: f64,
    /// Upper bound on the integral over the complement of the domain.
    pub tail_bound: f64,
    /// Number of interior panels.
    pub regions_evaluated: usize,
    /// Interior contribution by region (indexed by [`RegionTag::index`]).
    pub region_values: [f64; 4],
    /// `∫|λ₊|²` and `∫|λ₋|²` (Lagrangian-type integrals only).
    pub lambda_plus_sq: f64,
    pub lambda_minus_sq: f64,
    /// Envelope constants `(A₁, A₂)` used in the tail bound.
    pub envelope_constants: (f64, f64),
    pub wall_time: f64,
}

impl QuadratureReport {
    /// Equality of everything except wall-clock time, bit for bit.
    pub fn same_numbers(&self, o: &QuadratureReport) -> bool {
        let mut a = self.clone();
        let mut b = o.clone();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        format!("{a:?}") == format!("{b:?}")
    }
}

/// Density evaluated at `(t, r)`: `[main, |λ₊|², |λ₋|²]`.
fn density(kind: IntegralKind, m: f64, eps_eff: f64, t: f64, r: f64) -> [f64; 3] {
    let xi = FourVector::new(t, r, 0.0, 0.0);
    let k = match RegKernelParams::new(m, eps_eff).and_then(|p| kernel_p_xi(xi, p)) {
        Ok(k) => k,
        Err(_) => return [f64::NAN; 3],
    };
    match kind {
        IntegralKind::P4 => {
            let n = k.spectral_norm();
            let n2 = n * n;
            [n2 * n2, 0.0, 0.0]
        }
        IntegralKind::P4Column { mu } => {
            // Column μ of F·ξ̸_ε + G: diagonal entry F·τ·s_μ + G, the rest
            // has norm |F|·r.
            let tau = Complex64::new(t, eps_eff);
            let s = crate::spinor::SIGNATURE[mu] as f64;
            let n2 = (k.f * tau * s + k.g).norm_sqr() + k.f.norm_sqr() * r * r;
            [n2 * n2, 0.0, 0.0]
        }
        IntegralKind::Lagrangian | IntegralKind::Ell { .. } => {
            let (a, b) = chain_ab(k.f, k.g, t, r, eps_eff);
            let (lp, lm) = if b >= 0.0 {
                let s = b.sqrt();
                ((a + s).powi(2), (a - s).powi(2))
            } else {
                let s = a * a - b;
                (s, s)
            };
            [4.0 * b.max(0.0), lp, lm]
        }
    }
}

/// Upper envelope of `|P^{ε}(0, ξ)|₂` outside a neighbourhood of the
/// origin, from `|K_n(w)| ≤ A_n|w|^{−1/2}e^{−Re w}` for `|w| ≥ w_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub m: f64,
    pub eps: f64,
    pub a1: f64,
    pub a2: f64,
    pub w_min: f64,
}

impl Envelope {
    /// Calibrate `A₁, A₂` as twice the sampled supremum of
    /// `|K_n(w)|·|w|^{1/2}·e^{Re w}` over the closed right half-plane with
    /// `|w| ≥ w_min`.
    pub fn calibrate(m: f64, eps: f64, w_min: f64) -> Result<Self> {
        require_positive("w_min", w_min)?;
        let radii = 240;
        let args = 61;
        // Beyond |w| = 500 the asymptotic expansion pins the scaled
        // modulus to √(π/2)·(1 + O(1/|w|)) with a relative correction
        // below 1%, well inside the factor-two margin.
        let hi = (w_min * 4.0).max(500.0);
        let mut sup = [0.0f64; 2];
        for i in 0..radii {
            let rad = w_min * (hi / w_min).powf(i as f64 / (radii - 1) as f64);
            for j in 0..args {
                let phi = -0.5 * PI + 1e-9 + (PI - 2e-9) * j as f64 / (args - 1) as f64;
                let w = Complex64::from_polar(rad, phi);
                let z = CutPlanePoint::new(w)?;
                for (slot, n) in [(0usize, 1u32), (1, 2)] {
                    let k = bessel_k(n, z)?.norm();
                    if k > 0.0 && k.is_finite() {
                        let v = (k.ln() + 0.5 * rad.ln() + w.re).exp();
                        sup[slot] = sup[slot].max(v);
                    }
                }
            }
        }
        let floor = (0.5 * PI).sqrt();
        Ok(Self {
            m,
            eps,
            a1: 2.0 * sup[0].max(floor),
            a2: 2.0 * sup[1].max(floor),
            w_min,
        })
    }

    /// Bounds `(|F|, |G|)` at `(t, r)`; valid where `m√|ξ_ε²| ≥ w_min`.
    pub fn scalar_bounds(&self, t: f64, r: f64) -> (f64, f64) {
        let (m, e) = (self.m, self.eps);
        let z = Complex64::new(r * r - t * t + e * e, -2.0 * e * t);
        let zn = z.norm();
        let wn = m * zn.sqrt();
        let decay = (-m * re_sqrt(z)).exp() / wn.sqrt();
        let c = m * m / TWO_PI_CUBED;
        (c * self.a2 * decay / zn, c * self.a1 * decay / zn.sqrt())
    }

    /// Bound on `|P|₂ ≤ |F|·(|ξ⁰ + iε| + |ξ⃗|) + |G|`.
    pub fn value(&self, t: f64, r: f64) -> f64 {
        let (f_bd, g_bd) = self.scalar_bounds(t, r);
        f_bd * ((t * t + self.eps * self.eps).sqrt() + r) + g_bd
    }

    /// Bound on the Lagrangian density: dropping the negative term of `b`,
    /// `4|b|₊ ≤ 8|F|²|G|²(|ξ_ε²| + |t² + ε² − r²|)`.
    pub fn lagrangian_bound(&self, t: f64, r: f64) -> f64 {
        let (f_bd, g_bd) = self.scalar_bounds(t, r);
        let e = self.eps;
        let z = Complex64::new(r * r - t * t + e * e, -2.0 * e * t).norm();
        let h = (t * t + e * e - r * r).abs();
        8.0 * f_bd * f_bd * g_bd * g_bd * (z + h)
    }

    /// Bound on the density of `kind`.
    pub fn density_bound(&self, kind: IntegralKind, t: f64, r: f64) -> f64 {
        match kind {
            IntegralKind::P4 | IntegralKind::P4Column { .. } => self.value(t, r).powi(4),
            _ => self.lagrangian_bound(t, r),
        }
    }
}

/// `w_min` valid on the complement of `[0,T]×[0,R]` (see the module docs).
fn envelope_w_min(m: f64, eps: f64, t_max: f64, r_max: f64) -> f64 {
    let z_min = (eps * r_max).min(0.75 * r_max * r_max).min(2.0 * eps * t_max);
    m * z_min.sqrt()
}

/// `∫_a^∞ f` by the substitution `x = a + L·u/(1−u)`.
fn semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, rel: f64) -> (f64, f64) {
    let g = |u: f64| {
        let d = 1.0 - u;
        let x = a + scale * u / d;
        let v = f(x) * scale / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let r = adaptive_gk(
        |u, out: &mut [f64]| out[0] = g(u),
        &[0.0, 0.5, 0.9, 0.99, 1.0],
        1,
        0.0,
        rel,
        4000,
    );
    (r.value[0], r.error)
}

/// Radial integral `∫_{r_lo}^∞ 4πr² E(t,r)⁴ dr` with breakpoints around the
/// light cone `r = t`.
fn radial_envelope_integral(env: &Envelope, kind: IntegralKind, t: f64, r_lo: f64, rel: f64) -> (f64, f64) {
    let f = |r: f64| 4.0 * PI * r * r * env.density_bound(kind, t, r);
    let w = (4.0 * env.eps).max(1e-3).min(0.5 * t.max(1e-3));
    let mut br = vec![r_lo];
    for b in [t - 8.0 * w, t - w, t, t + w, t + 8.0 * w, 2.0 * t + 1.0] {
        if b > *br.last().unwrap() {
            br.push(b);
        }
    }
    let r_end = *br.last().unwrap();
    let (mut v, mut e) = (0.0, 0.0);
    if br.len() > 1 {
        let res = adaptive_gk(|r, out: &mut [f64]| out[0] = f(r), &br, 1, 0.0, rel, 4000);
        v += res.value[0];
        e += res.error;
    }
    let (tv, te) = semi_infinite(f, r_end, 1.0 / env.m + env.eps, rel);
    (v + tv, e + te)
}

/// Upper bound for the integral of the density of `kind` over the
/// complement of the box `[−T, T] × {|ξ⃗| ≤ R}`. Returns
/// `(value, quadrature error)`.
pub fn envelope_tail_integral(env: &Envelope, kind: IntegralKind, t_max: f64, r_max: f64) -> (f64, f64) {
    let rel = 1e-6;
    // (a) t ≥ T, all r: t = T/s.
    let piece_a = adaptive_gk(
        |s, out: &mut [f64]| {
            let t = t_max / s;
            let (v, _) = radial_envelope_integral(env, kind, t, 0.0, rel);
            out[0] = v * t_max / (s * s);
        },
        &[0.0, 0.25, 0.5, 0.75, 1.0],
        1,
        0.0,
        1e-5,
        400,
    );
    // (b) 0 ≤ t < T, r ≥ R.
    let mut tb = vec![0.0];
    if r_max < t_max {
        tb.push(r_max);
    }
    tb.push(t_max);
    let piece_b = adaptive_gk(
        |t, out: &mut [f64]| {
            let (v, _) = radial_envelope_integral(env, kind, t, r_max, rel);
            out[0] = v;
        },
        &tb,
        1,
        0.0,
        1e-5,
        400,
    );
    let value = 2.0 * (piece_a.value[0] + piece_b.value[0]);
    let err = 2.0 * (piece_a.error + piece_b.error);
    (value, err)
}

/// Rectangle of one of the two interior pieces, in `(u, s)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelSummary {
    /// 0: timelike piece (`u = t`, `r = min(t,R)·s`);
    /// 1: spacelike piece (`u = r`, `t = min(r,T)·s`).
    pub piece: u8,
    pub u0: f64,
    pub u1: f64,
    pub s0: f64,
    pub s1: f64,
    pub value: f64,
}

/// Map `(u, s)` of a piece to `(t, r, dt·dr/(du·ds))`.
fn piece_map(piece: u8, u: f64, s: f64, t_max: f64, r_max: f64) -> (f64, f64, f64) {
    if piece == 0 {
        let l = u.min(r_max);
        (u, l * s, l)
    } else {
        let l = u.min(t_max);
        (l * s, u, l)
    }
}

struct Rect {
    id: u64,
    piece: u8,
    u0: f64,
    u1: f64,
    s0: f64,
    s1: f64,
    value: [f64; 3],
    err_u: f64,
    err_s: f64,
}

impl Rect {
    fn err(&self) -> f64 {
        self.err_u + self.err_s
    }
}

impl PartialEq for Rect {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id
    }
}
impl Eq for Rect {}
impl PartialOrd for Rect {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Rect {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err().total_cmp(&o.err()).then_with(|| o.id.cmp(&self.id))
    }
}

struct Geometry {
    t_max: f64,
    r_max: f64,
}

fn eval_rect<F>(f: &F, geo: &Geometry, piece: u8, u0: f64, u1: f64, s0: f64, s1: f64) -> Rect
where
    F: Fn(f64, f64) -> [f64; 3] + Sync,
{
    let nodes = gk15_nodes();
    let (uc, uh) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
    let (sc, sh) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
    let mut kk = [0.0; 3];
    let mut gk = [0.0; 3];
    let mut kg = [0.0; 3];
    for &(xu, wku, wgu) in &nodes {
        let u = uc + uh * xu;
        for &(xs, wks, wgs) in &nodes {
            let s = sc + sh * xs;
            let (t, r, jac) = piece_map(piece, u, s, geo.t_max, geo.r_max);
            let w = 8.0 * PI * r * r * jac;
            let v = f(t, r);
            for d in 0..3 {
                let fv = v[d] * w;
                kk[d] += wku * wks * fv;
                gk[d] += wgu * wks * fv;
                kg[d] += wku * wgs * fv;
            }
        }
    }
    let area = uh * sh;
    for d in 0..3 {
        kk[d] *= area;
        gk[d] *= area;
        kg[d] *= area;
    }
    Rect {
        id: 0,
        piece,
        u0,
        u1,
        s0,
        s1,
        value: kk,
        err_u: (kk[0] - gk[0]).abs(),
        err_s: (kk[0] - kg[0]).abs(),
    }
}

fn initial_breaks(eps: f64, upper: f64, kink: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = eps;
    while x < upper.min(1.0) {
        b.push(x);
        x *= 2.0;
    }
    let mut k = 1.0;
    while k < upper {
        if k > *b.last().unwrap() {
            b.push(k);
        }
        k += 1.0;
    }
    if kink > 0.0 && kink < upper {
        b.push(kink);
    }
    b.push(upper);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Interior integral plus bookkeeping, before tail handling.
struct Interior {
    value: [f64; 3],
    error: f64,
    panels: Vec<PanelSummary>,
    region_values: [f64; 4],
}

fn integrate_interior<F>(
    f: &F,
    eps_eff: f64,
    t_max: f64,
    r_max: f64,
    cfg: &QuadConfig,
) -> Result<Interior>
where
    F: Fn(f64, f64) -> [f64; 3] + Sync,
{
    let geo = Geometry { t_max, r_max };
    let s_breaks = [0.0, 0.5, 0.9, 1.0];
    let mut seeds = Vec::new();
    for (piece, upper, kink) in [(0u8, t_max, r_max), (1u8, r_max, t_max)] {
        let ub = initial_breaks(eps_eff, upper, kink);
        for uw in ub.windows(2) {
            for sw in s_breaks.windows(2) {
                seeds.push((piece, uw[0], uw[1], sw[0], sw[1]));
            }
        }
    }
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    let first: Vec<Rect> = seeds
        .par_iter()
        .map(|&(p, u0, u1, s0, s1)| eval_rect(f, &geo, p, u0, u1, s0, s1))
        .collect();
    for mut r in first {
        r.id = next_id;
        next_id += 1;
        heap.push(r);
    }
    let sums = |heap: &BinaryHeap<Rect>| {
        let mut v = 0.0;
        let mut e = 0.0;
        for r in heap.iter() {
            v += r.value[0];
            e += r.err();
        }
        (v, e)
    };
    let (mut value, mut error) = sums(&heap);
    let mut iter = 0usize;
    let batch = 64;
    loop {
        if !value.is_finite() {
            return Err(CfsError::Invariant("non-finite integrand in the interior".into()));
        }
        if error <= 0.5 * cfg.rel_tol * value.abs() {
            break;
        }
        if heap.len() >= cfg.max_panels {
            return Err(CfsError::NonConvergence(format!(
                "interior quadrature: error {error:.3e} vs value {value:.6e} after {} panels",
                heap.len()
            )));
        }
        let take = batch.min(heap.len());
        let parents: Vec<Rect> = (0..take).map(|_| heap.pop().unwrap()).collect();
        let children: Vec<[Rect; 2]> = parents
            .par_iter()
            .map(|p| {
                if p.err_u >= p.err_s {
                    let mid = 0.5 * (p.u0 + p.u1);
                    [
                        eval_rect(f, &geo, p.piece, p.u0, mid, p.s0, p.s1),
                        eval_rect(f, &geo, p.piece, mid, p.u1, p.s0, p.s1),
                    ]
                } else {
                    let mid = 0.5 * (p.s0 + p.s1);
                    [
                        eval_rect(f, &geo, p.piece, p.u0, p.u1, p.s0, mid),
                        eval_rect(f, &geo, p.piece, p.u0, p.u1, mid, p.s1),
                    ]
                }
            })
            .collect();
        for (p, pair) in parents.iter().zip(children) {
            value -= p.value[0];
            error -= p.err();
            for mut c in pair {
                value += c.value[0];
                error += c.err();
                c.id = next_id;
                next_id += 1;
                heap.push(c);
            }
        }
        iter += 1;
        if iter % 32 == 0 {
            (value, error) = sums(&heap);
        }
    }
    let mut rects = heap.into_vec();
    rects.sort_by_key(|r| r.id);
    let mut total = [0.0; 3];
    let mut err = 0.0;
    let mut region_values = [0.0; 4];
    let mut panels = Vec::with_capacity(rects.len());
    for r in &rects {
        for d in 0..3 {
            total[d] += r.value[d];
        }
        err += r.err();
        let (t, rr, _) = piece_map(r.piece, 0.5 * (r.u0 + r.u1), 0.5 * (r.s0 + r.s1), t_max, r_max);
        region_values[classify_tr(t, rr, cfg.region_lambda).index()] += r.value[0];
        panels.push(PanelSummary {
            piece: r.piece,
            u0: r.u0,
            u1: r.u1,
            s0: r.s0,
            s1: r.s1,
            value: r.value[0],
        });
    }
    Ok(Interior {
        value: total,
        error: err,
        panels,
        region_values,
    })
}

/// Full result of a reduced integral, including the interior panel set.
#[derive(Debug, Clone)]
pub struct ReducedIntegral {
    pub report: QuadratureReport,
    pub panels: Vec<PanelSummary>,
    pub kind: IntegralKind,
    pub params: RegKernelParams,
}

/// Integrate `kind` over ℝ⁴ with the given configuration. The domain is
/// doubled (up to `max_doublings` times) until the tail bound fits into
/// half of the tolerance.
pub fn integrate_reduced(
    kind: IntegralKind,
    params: RegKernelParams,
    cfg: &QuadConfig,
) -> Result<ReducedIntegral> {
    let start = Instant::now();
    let (mut t_max, mut r_max) = (cfg.t_max, cfg.r_max);
    let mut doublings = 0;
    loop {
        let mut res = integrate_on_domain(kind, params, cfg, t_max, r_max)?;
        let rep = &res.report;
        let ok = rep.tail_bound <= 0.5 * cfg.rel_tol * rep.value.abs();
        if ok {
            res.report.wall_time = start.elapsed().as_secs_f64();
            return Ok(res);
        }
        if doublings >= cfg.max_doublings {
            return Err(CfsError::NonConvergence(format!(
                "{}: tail bound {:.3e} exceeds half the tolerance of {:.6e} at T = {t_max}, R = {r_max}",
                kind.name(),
                rep.tail_bound,
                rep.value
            )));
        }
        t_max *= 2.0;
        r_max *= 2.0;
        doublings += 1;
    }
}

/// Integrate `kind` over the fixed domain `|ξ⁰| ≤ T, |ξ⃗| ≤ R` and bound
/// the complement, without enforcing the tail share of the tolerance.
pub fn integrate_on_domain(
    kind: IntegralKind,
    params: RegKernelParams,
    cfg: &QuadConfig,
    t_max: f64,
    r_max: f64,
) -> Result<ReducedIntegral> {
    cfg.validate()?;
    require_positive("truncation_T", t_max)?;
    require_positive("truncation_R", r_max)?;
    if let IntegralKind::P4Column { mu } = kind {
        if mu > 3 {
            return Err(invalid("mu", format!("spinor index must be 0..=3, got {mu}")));
        }
    }
    let eps_eff = kind.effective_eps(params.eps);
    if !(eps_eff > 0.0) {
        return Err(invalid("lambda_var", format!("effective regularization {eps_eff} must be positive")));
    }
    let start = Instant::now();
    let m = params.m;
    let f = move |t: f64, r: f64| density(kind, m, eps_eff, t, r);
    let interior = integrate_interior(&f, eps_eff, t_max, r_max, cfg)?;
    let env = Envelope::calibrate(m, eps_eff, envelope_w_min(m, eps_eff, t_max, r_max))?;
    let (tail, tail_err) = envelope_tail_integral(&env, kind, t_max, r_max);
    let report = QuadratureReport {
        name: kind.name().to_string(),
        m,
        epsilon: params.eps,
        lambda_region: cfg.region_lambda,
        lambda_var: kind.lambda_var(),
        value: interior.value[0],
        abs_error_estimate: interior.error,
        truncation_radius: t_max.max(r_max),
        t_max,
        r_max,
        tail_bound: tail + 10.0 * tail_err,
        regions_evaluated: interior.panels.len(),
        region_values: interior.region_values,
        lambda_plus_sq: interior.value[1],
        lambda_minus_sq: interior.value[2],
        envelope_constants: (env.a1, env.a2),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(ReducedIntegral {
        report,
        panels: interior.panels,
        kind,
        params,
    })
}

/// `∫_{ℝ⁴} |P^{2ε}(x,y)|₂⁴ d⁴y` (independent of `x`).
pub fn integrate_p4(params: RegKernelParams, cfg: &QuadConfig) -> Result<QuadratureReport> {
    integrate_reduced(IntegralKind::P4, params, cfg).map(|r| r.report)
}

/// `∫_{ℝ⁴} L^ε(x,y) d⁴y`, with `∫|λ±|²` accumulators.
pub fn integrate_lagrangian(params: RegKernelParams, cfg: &QuadConfig) -> Result<QuadratureReport> {
    integrate_reduced(IntegralKind::Lagrangian, params, cfg).map(|r| r.report)
}

/// `ℓ` of the regularization-rescaled correlation operator: the Lagrangian
/// integral for the chain built from `F^{ε+λ_var}(x)` and `F^ε(y)`, whose
/// kernel carries regularization `2ε + λ_var`.
pub fn ell_varied(lambda_var: f64, params: RegKernelParams, cfg: &QuadConfig) -> Result<QuadratureReport> {
    if !(params.eps + lambda_var > 0.0) {
        return Err(invalid("lambda_var", format!("epsilon + lambda_var must be positive, got {}", params.eps + lambda_var)));
    }
    integrate_reduced(IntegralKind::Ell { lambda_var }, params, cfg).map(|r| r.report)
}

/// Monte-Carlo estimate of the truncated integral evaluated at base point
/// `x` *without* the radial reduction: `y = x − ξ` is drawn in ℝ⁴ from a
/// density built from the interior panels (random direction of `ξ⃗`,
/// random sign of `ξ⁰`), and the density is evaluated from the full 4×4
/// kernel matrices. Returns `(mean, standard error)`.
pub fn monte_carlo_shifted(
    reduced: &ReducedIntegral,
    x: FourVector,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(invalid("mc_samples", "need at least two samples"));
    }
    let rep = &reduced.report;
    let (t_max, r_max) = (rep.t_max, rep.r_max);
    let total: f64 = reduced.panels.iter().map(|p| p.value.max(0.0)).sum();
    let n = reduced.panels.len() as f64;
    let probs: Vec<f64> = reduced
        .panels
        .iter()
        .map(|p| 0.9 * p.value.max(0.0) / total + 0.1 / n)
        .collect();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let kind = reduced.kind;
    let params = reduced.params;
    let eps_eff = kind.effective_eps(params.eps);
    let kp = RegKernelParams::new(params.m, eps_eff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let target = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c < target).min(cdf.len() - 1);
        let p = &reduced.panels[i];
        let u = p.u0 + (p.u1 - p.u0) * rng.random::<f64>();
        let s = p.s0 + (p.s1 - p.s0) * rng.random::<f64>();
        let (t, r, jac) = piece_map(p.piece, u, s, t_max, r_max);
        let cos_t: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let xi = FourVector::new(sign * t, r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t);
        let y = x - xi;
        let fval = match kind {
            IntegralKind::P4 => {
                let n = spectral_norm(&kernel_p(x, y, kp)?.matrix);
                n.powi(4)
            }
            IntegralKind::P4Column { mu } => {
                let col = kernel_p(x, y, kp)?.matrix.column(mu);
                crate::spinor::spinor_norm(&col).powi(4)
            }
            IntegralKind::Lagrangian => chain_invariants(x, y, params)?.lagrangian(),
            IntegralKind::Ell { .. } => {
                let k = kernel_p(x, y, kp)?;
                let d = x - y;
                4.0 * chain_ab(k.f, k.g, d.t(), d.spatial_norm(), eps_eff).1.max(0.0)
            }
        };
        let area = (p.u1 - p.u0) * (p.s1 - p.s0);
        let weight = 8.0 * PI * r * r * jac * area / (probs[i] / acc);
        let est = fval * weight;
        sum += est;
        sum2 += est * est;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = (sum2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok((mean, (var / nf).sqrt()))
}

/// Rotation-invariance witness: the density at `(t, r)` along a given
/// spatial direction, from the full kernel matrix.
pub fn density_along(kind: IntegralKind, params: RegKernelParams, t: f64, dir: [f64; 3], r: f64) -> Result<f64> {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let xi = FourVector::new(t, r * dir[0] / norm, r * dir[1] / norm, r * dir[2] / norm);
    let eps_eff = kind.effective_eps(params.eps);
    let k = kernel_p_xi(xi, RegKernelParams::new(params.m, eps_eff)?)?;
    Ok(match kind {
        IntegralKind::P4 => spectral_norm(&k.matrix).powi(4),
        IntegralKind::P4Column { mu } => crate::spinor::spinor_norm(&k.matrix.column(mu)).powi(4),
        _ => 4.0 * chain_ab(k.f, k.g, t, r, eps_eff).1.max(0.0),
    })
}

/// `|P|₂⁴` at `(t, r)` for regularization `eps` (closed form).
pub fn p4_density(m: f64, eps: f64, t: f64, r: f64) -> Result<f64> {
    let xi = FourVector::new(t, r, 0.0, 0.0);
    let k = kernel_p_xi(xi, RegKernelParams::new(m, eps)?)?;
    let xe = ComplexFourVector(k.xi_eps.0);
    Ok(block_spectral_norm(k.f, k.g, xe).powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_examples() {
        let l = 0.8;
        assert_eq!(region_classify(FourVector::new(2.0, 0.0, 0.0, 0.0), l).unwrap(), RegionTag::C0);
        assert_eq!(region_classify(FourVector::new(0.5, 0.4, 0.0, 0.0), l).unwrap(), RegionTag::C1Plus);
        assert_eq!(region_classify(FourVector::new(1.0, 10.0, 0.0, 0.0), l).unwrap(), RegionTag::C2);
        assert!(region_classify(FourVector::new(0.0, 1.0, 0.0, 0.0), l).is_err());
        assert!(region_classify(FourVector::new(1.0, 1.0, 0.0, 0.0), 0.4).is_err());
    }

    #[test]
    fn decay_examples() {
        let b = decay_lower_bound(FourVector::new(4.0, 4.0, 0.0, 0.0), 0.25, 0.8).unwrap();
        assert!((b - 0.5 * 4f64.powf(0.2)).abs() < 1e-15);
        assert!(b <= exponent_closed_form(4.0, 4.0, 0.25));
        let b = decay_lower_bound(FourVector::new(1.0, 10.0, 0.0, 0.0), 0.1, 0.8).unwrap();
        assert!((b - 4.254).abs() < 1e-3);
        assert!(decay_lower_bound(FourVector::new(2.0, 0.0, 0.0, 0.0), 0.1, 0.8).is_err());
    }

    #[test]
    fn envelope_dominates_kernel() {
        let (m, e) = (1.0, 0.2);
        let env = Envelope::calibrate(m, e, envelope_w_min(m, e, 10.0, 10.0)).unwrap();
        for &(t, r) in &[(10.0, 0.0), (10.0, 10.0), (12.0, 3.0), (3.0, 10.0), (9.9, 10.0), (40.0, 39.9)] {
            let p = p4_density(m, e, t, r).unwrap().powf(0.25);
            assert!(p <= env.value(t, r), "{t} {r}: {p} vs {}", env.value(t, r));
        }
    }
}
