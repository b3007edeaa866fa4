//! First-order electromagnetic perturbation of the vacuum.
//!
//! The retarded Dirac Green's function is `s^∧ = (i∂̸ + m)S^∧` with the
//! scalar retarded kernel `S^∧(ξ) = α·δ(ξ²)Θ(ξ⁰) + β·J₁(m√ξ²)/(m√ξ²)·Θ(ξ²)Θ(ξ⁰)`.
//! Convolutions with `S^∧` are evaluated on quadrature nodes fixed in
//! `ξ`-space (a cone-surface rule for the `δ(ξ²)` part, a past-cone volume
//! rule for the Bessel part), so that the convolution is an exact finite
//! sum `Σ_k w_k g(x − ξ_k)` whose finite differences in `x` are as smooth
//! as the integrand itself. The derivative `i∂̸ + m` is applied outside the
//! convolution by fourth-order central differences.
//!
//! The constants `α, β` are calibrated against the first-order Cauchy
//! identity `(i∂̸ − m)Ψ⁽¹⁾u + A̸·R_ε u = 0`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel::bessel_j1_over_x;
use crate::error::{invalid, require_positive, CfsError, Result};
use crate::integrate::gauss_legendre;
use crate::kernel::{kernel_p, RegKernelParams};
use crate::spinor::{slash, ComplexFourVector, FourVector, Spinor, SpinorMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `exp(1 − 1/(1 − s²))` for `s < 1`, zero otherwise (C^∞, value 1 at 0).
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Euclidean 4-ball `|y − center| < radius` containing a support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBall {
    pub center: FourVector,
    pub radius: f64,
}

impl SupportBall {
    pub fn new(center: FourVector, radius: f64) -> Result<Self> {
        require_positive("support_radius", radius)?;
        if !center.is_finite() {
            return Err(CfsError::Domain("support center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    fn enlarged(&self, margin: f64) -> Self {
        Self {
            center: self.center,
            radius: self.radius + margin,
        }
    }

    /// `sup_{y ∈ ball} [(x⁰ − y⁰) − |x⃗ − y⃗|]`: non-negative iff `x` lies in
    /// the causal future of the closed ball.
    pub fn causal_margin(&self, x: FourVector) -> f64 {
        let d = x - self.center;
        let a = d.t();
        let delta = d.spatial_norm();
        let r = self.radius;
        if delta >= r / 2f64.sqrt() {
            a - delta + r * 2f64.sqrt()
        } else {
            a + (r * r - delta * delta).sqrt()
        }
    }
}

/// Smooth compactly supported potential `A^j(y) = amplitude·bump(|y − c|/R)·p^j`
/// (contravariant components).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub polarization: [f64; 4],
    pub amplitude: f64,
    pub support: SupportBall,
}

impl Potential {
    /// Validates that the support lies in `{x⁰ > initial_time}`.
    pub fn new(polarization: [f64; 4], amplitude: f64, support: SupportBall, initial_time: f64) -> Result<Self> {
        if !amplitude.is_finite() || polarization.iter().any(|p| !p.is_finite()) {
            return Err(invalid("potential", "amplitude and polarization must be finite"));
        }
        if support.center.t() - support.radius <= initial_time {
            return Err(invalid(
                "potential",
                format!("support must lie in x0 > {initial_time}"),
            ));
        }
        Ok(Self {
            polarization,
            amplitude,
            support,
        })
    }

    /// Default test potential: `A³` bump of radius 0.5 centred at `(1,0,0,0)`.
    pub fn default_test() -> Self {
        let s = SupportBall::new(FourVector::new(1.0, 0.0, 0.0, 0.0), 0.5).expect("valid ball");
        Self::new([0.0, 0.0, 0.0, 1.0], 1.0, s, 0.0).expect("valid potential")
    }

    /// Second test potential: mixed `A⁰, A¹` bump of radius 0.6 centred at
    /// `(1.2, 0.3, 0, 0)`.
    pub fn second_test() -> Self {
        let s = SupportBall::new(FourVector::new(1.2, 0.3, 0.0, 0.0), 0.6).expect("valid ball");
        Self::new([0.6, 0.8, 0.0, 0.0], 0.7, s, 0.0).expect("valid potential")
    }

    /// Same potential with amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            amplitude: self.amplitude * s,
            ..*self
        }
    }

    pub fn value(&self, y: FourVector) -> [f64; 4] {
        let d = y - self.support.center;
        let s = (0..4).map(|k| d.0[k] * d.0[k]).sum::<f64>().sqrt() / self.support.radius;
        let b = self.amplitude * bump(s);
        self.polarization.map(|p| b * p)
    }

    /// `A̸(y)`, or `None` outside the support.
    pub fn slashed(&self, y: FourVector) -> Option<SpinorMatrix> {
        let v = self.value(y);
        if v.iter().all(|c| *c == 0.0) {
            return None;
        }
        Some(slash(ComplexFourVector::from_real(FourVector(v))))
    }
}

/// Constants of the scalar retarded kernel and the finite-difference step
/// (which also sets the smoothing scale of all derivatives).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenParams {
    pub alpha: f64,
    pub beta: f64,
    pub mollifier_width: f64,
}

impl GreenParams {
    pub fn new(alpha: f64, beta: f64, mollifier_width: f64) -> Result<Self> {
        require_positive("mollifier_width", mollifier_width)?;
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid("green", "constants must be finite"));
        }
        Ok(Self {
            alpha,
            beta,
            mollifier_width,
        })
    }
}

/// Default finite-difference step (and smoothing scale) of the
/// perturbation computations.
pub const DEFAULT_FD_STEP: f64 = 0.01;

/// Node counts of the fixed convolution rules. The radial and time
/// directions cross the steep flanks of compactly supported sources and
/// need the most nodes; the angular rules converge much faster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvolutionRule {
    /// Gauss nodes in `ξ⁰` (volume part).
    pub n_time: usize,
    /// Gauss nodes in `|ξ⃗|`.
    pub n_radial: usize,
    /// Gauss nodes in the polar cosine about the support direction.
    pub n_polar: usize,
    /// Trapezoidal nodes in the azimuth.
    pub n_azimuth: usize,
}

impl ConvolutionRule {
    pub fn coarse() -> Self {
        Self {
            n_time: 32,
            n_radial: 40,
            n_polar: 16,
            n_azimuth: 12,
        }
    }

    pub fn fine() -> Self {
        Self {
            n_time: 48,
            n_radial: 64,
            n_polar: 16,
            n_azimuth: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.n_time, self.n_radial, self.n_polar, self.n_azimuth].iter().any(|&n| n < 2) {
            return Err(invalid("convolution_rule", "every node count must be at least 2"));
        }
        Ok(())
    }
}

impl Default for ConvolutionRule {
    fn default() -> Self {
        Self::coarse()
    }
}

/// `S^∧` volume part: `β·J₁(m√ξ²)/(m√ξ²)` inside the future cone, zero
/// elsewhere (value `β/2` on the cone itself).
pub fn green_volume_part(xi: FourVector, m: f64, gp: &GreenParams) -> f64 {
    let s2 = xi.minkowski_square();
    if xi.t() <= 0.0 || s2 < 0.0 {
        return 0.0;
    }
    gp.beta * bessel_j1_over_x(m * s2.sqrt()).unwrap_or(0.0)
}

/// Quadrature nodes `(ξ, w)` of the surface and volume parts.
#[derive(Debug, Clone, Default)]
struct NodeSet {
    surface: Vec<(FourVector, f64)>,
    volume: Vec<(FourVector, f64)>,
}

/// Orthonormal frame `(e₁, e₂, axis)` of ℝ³.
fn spatial_frame(d: [f64; 3]) -> [[f64; 3]; 3] {
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let axis = if n > 1e-12 { d.map(|c| c / n) } else { [0.0, 0.0, 1.0] };
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * axis[0] + helper[1] * axis[1] + helper[2] * axis[2];
    let mut e1 = [helper[0] - dot * axis[0], helper[1] - dot * axis[1], helper[2] - dot * axis[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = e1.map(|c| c / n1);
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    [e1, e2, axis]
}

fn map_gauss<'a>(gx: &'a [f64], gw: &'a [f64], a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + 'a {
    let h = 0.5 * (b - a);
    gx.iter().zip(gw).map(move |(x, w)| (a + h * (x + 1.0), h * w))
}

/// Smallest polar cosine (about the direction `x⃗ − c⃗`) for which
/// `|x⃗ − c⃗ − ρn̂| < r_sp` is possible.
fn polar_cut(delta: f64, rho: f64, r_sp: f64) -> f64 {
    if delta <= 1e-12 || rho <= 0.0 {
        return -1.0;
    }
    ((delta * delta + rho * rho - r_sp * r_sp) / (2.0 * delta * rho)).max(-1.0)
}

/// Angular rule on the cap `cos θ ∈ [c_min, 1]` of the sphere, returning
/// unit vectors and weights (which integrate to the cap area).
fn cap_rule(frame: &[[f64; 3]; 3], c_min: f64, rule: &ConvolutionRule, gp: &(Vec<f64>, Vec<f64>)) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(rule.n_polar * rule.n_azimuth);
    if c_min >= 1.0 {
        return out;
    }
    let dphi = 2.0 * std::f64::consts::PI / rule.n_azimuth as f64;
    for (c, wc) in map_gauss(&gp.0, &gp.1, c_min, 1.0) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for k in 0..rule.n_azimuth {
            let phi = (k as f64 + 0.5) * dphi;
            let (sp, cp) = phi.sin_cos();
            let n = [0, 1, 2].map(|i| c * frame[2][i] + s * (cp * frame[0][i] + sp * frame[1][i]));
            out.push((n, wc * dphi));
        }
    }
    out
}

/// Nodes for convolutions evaluated near `x` (within `reach` in every
/// coordinate direction) with sources supported in `support`.
fn build_nodes(x: FourVector, support: &SupportBall, m: f64, reach: f64, rule: &ConvolutionRule) -> NodeSet {
    let ball = support.enlarged(1.5 * reach);
    let mut nodes = NodeSet::default();
    let d = x - ball.center;
    let a = d.t();
    let dvec = [d.0[1], d.0[2], d.0[3]];
    let delta = d.spatial_norm();
    let frame = spatial_frame(dvec);
    let rr = ball.radius;
    let g_rad = gauss_legendre(rule.n_radial);
    let g_pol = gauss_legendre(rule.n_polar);
    let g_time = gauss_legendre(rule.n_time);

    // Surface: ξ = (ρ, ρn̂); (a − ρ)² + (δ − ρ)² < R² bounds ρ.
    let disc = (a + delta).powi(2) - 2.0 * (a * a + delta * delta - rr * rr);
    if disc > 0.0 {
        let lo = (0.5 * ((a + delta) - disc.sqrt())).max(0.0);
        let hi = 0.5 * ((a + delta) + disc.sqrt());
        if hi > lo {
            for (rho, wr) in map_gauss(&g_rad.0, &g_rad.1, lo, hi) {
                let r_sp2 = rr * rr - (a - rho).powi(2);
                if r_sp2 <= 0.0 {
                    continue;
                }
                let cmin = polar_cut(delta, rho, r_sp2.sqrt());
                for (n, wa) in cap_rule(&frame, cmin, rule, &g_pol) {
                    let xi = FourVector::new(rho, rho * n[0], rho * n[1], rho * n[2]);
                    // d³ξ/(2|ξ⃗|) = (ρ/2) dρ dΩ.
                    nodes.surface.push((xi, 0.5 * rho * wr * wa));
                }
            }
        }
    }

    // Volume: ξ⁰ = τ ∈ (a − R, a + R), |ξ⃗| = ρ ≤ τ.
    let t_lo = (a - rr).max(0.0);
    let t_hi = a + rr;
    if t_hi > t_lo {
        for (tau, wt) in map_gauss(&g_time.0, &g_time.1, t_lo, t_hi) {
            let r_sp2 = rr * rr - (a - tau).powi(2);
            if r_sp2 <= 0.0 {
                continue;
            }
            let r_sp = r_sp2.sqrt();
            let lo = (delta - r_sp).max(0.0);
            let hi = (delta + r_sp).min(tau);
            if hi <= lo {
                continue;
            }
            for (rho, wr) in map_gauss(&g_rad.0, &g_rad.1, lo, hi) {
                let kv = bessel_j1_over_x(m * (tau * tau - rho * rho).max(0.0).sqrt()).unwrap_or(0.0);
                let cmin = polar_cut(delta, rho, r_sp);
                for (n, wa) in cap_rule(&frame, cmin, rule, &g_pol) {
                    let xi = FourVector::new(tau, rho * n[0], rho * n[1], rho * n[2]);
                    nodes.volume.push((xi, kv * rho * rho * wt * wr * wa));
                }
            }
        }
    }
    nodes
}

/// Surface (`δ(ξ²)`) and volume (Bessel, without `β`) parts of a
/// convolution `∫S^∧(x − y)g(y)d⁴y`, each a 4×4 matrix (spinor fields as
/// columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionParts {
    pub surface: SpinorMatrix,
    pub volume: SpinorMatrix,
}

impl ConvolutionParts {
    pub fn combine(&self, gp: &GreenParams) -> SpinorMatrix {
        self.surface * gp.alpha + self.volume * gp.beta
    }
}

fn convolve_nodes<G>(x: FourVector, nodes: &NodeSet, g: &G) -> ConvolutionParts
where
    G: Fn(FourVector) -> Option<SpinorMatrix>,
{
    let sum = |list: &[(FourVector, f64)]| {
        let mut acc = SpinorMatrix::zero();
        for (xi, w) in list {
            if let Some(v) = g(x - *xi) {
                acc += v * *w;
            }
        }
        acc
    };
    ConvolutionParts {
        surface: sum(&nodes.surface),
        volume: sum(&nodes.volume),
    }
}

/// Convolution parts of a source `g` supported in `support` at the point `x`.
pub fn convolution_parts<G>(x: FourVector, g: &G, support: &SupportBall, m: f64, rule: &ConvolutionRule) -> Result<ConvolutionParts>
where
    G: Fn(FourVector) -> Option<SpinorMatrix>,
{
    require_positive("mass", m)?;
    rule.validate()?;
    let nodes = build_nodes(x, support, m, 0.0, rule);
    Ok(convolve_nodes(x, &nodes, g))
}

/// `∫S^∧(x − y)g(y)d⁴y` for a source supported in `support`.
pub fn convolve_s<G>(x: FourVector, g: &G, support: &SupportBall, m: f64, gp: &GreenParams, rule: &ConvolutionRule) -> Result<SpinorMatrix>
where
    G: Fn(FourVector) -> Option<SpinorMatrix>,
{
    Ok(convolution_parts(x, g, support, m, rule)?.combine(gp))
}

/// Source `A̸(y)·P^{2ε}(y, z)` whose columns are `A̸·R_ε u_μ` for the frame
/// vectors `u_μ = P^ε(·, z)𝔢_μ`.
fn frame_source(potential: &Potential, params: RegKernelParams, z: FourVector) -> impl Fn(FourVector) -> Option<SpinorMatrix> + Sync + '_ {
    let p2 = RegKernelParams { m: params.m, eps: 2.0 * params.eps };
    move |y| {
        let a = potential.slashed(y)?;
        kernel_p(y, z, p2).ok().map(|k| a * k.matrix)
    }
}

/// Convolution parts at `x` and at the 16 points `x ± h e_j, x ± 2h e_j`,
/// all sharing one node set. Index `1 + 4j + k` holds offsets
/// `(−2h, −h, +h, +2h)[k]` along axis `j`; index 0 is the centre.
fn stencil_parts(
    x: FourVector,
    potential: &Potential,
    params: RegKernelParams,
    z: FourVector,
    h: f64,
    rule: &ConvolutionRule,
) -> Vec<ConvolutionParts> {
    let nodes = build_nodes(x, &potential.support, params.m, 2.0 * h, rule);
    let g = frame_source(potential, params, z);
    let mut points = vec![x];
    for j in 0..4 {
        for k in [-2.0, -1.0, 1.0, 2.0] {
            points.push(x + FourVector::axis(j).scaled(k * h));
        }
    }
    points.par_iter().map(|p| convolve_nodes(*p, &nodes, &g)).collect()
}

fn first_derivative(s: &[SpinorMatrix], j: usize, h: f64) -> SpinorMatrix {
    let f = |k: usize| s[1 + 4 * j + k];
    (f(0) - f(3) + (f(2) - f(1)) * 8.0) * (1.0 / (12.0 * h))
}

fn second_derivative(s: &[SpinorMatrix], j: usize, h: f64) -> SpinorMatrix {
    let f = |k: usize| s[1 + 4 * j + k];
    ((f(1) + f(2)) * 16.0 - f(0) - f(3) - s[0] * 30.0) * (1.0 / (12.0 * h * h))
}

/// `−(i∂̸ + m)` applied to stencil values.
fn dirac_plus(s: &[SpinorMatrix], m: f64, h: f64) -> SpinorMatrix {
    let mut out = s[0] * m;
    for j in 0..4 {
        out += SpinorMatrix::gamma(j) * first_derivative(s, j, h) * I;
    }
    -out
}

/// `(□ + m²)` applied to stencil values, `□ = ∂₀² − Δ`.
fn klein_gordon(s: &[SpinorMatrix], m: f64, h: f64) -> SpinorMatrix {
    let mut out = s[0] * (m * m) + second_derivative(s, 0, h);
    for j in 1..4 {
        out = out - second_derivative(s, j, h);
    }
    out
}

/// Common parameters of the perturbation computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSetup {
    pub params: RegKernelParams,
    pub green: GreenParams,
    pub rule: ConvolutionRule,
}

/// `Ψ⁽¹⁾(x)u_μ` for the four frame vectors `u_μ = P^ε(·, z)𝔢_μ`, as the
/// columns of a 4×4 matrix:
/// `Ψ⁽¹⁾(x)u = −(i∂̸ + m)∫S^∧(x − y)A̸(y)R_ε u(y)d⁴y`.
pub fn psi1_matrix(x: FourVector, z: FourVector, potential: &Potential, setup: &EmSetup) -> Result<SpinorMatrix> {
    setup.rule.validate()?;
    if !x.is_finite() || !z.is_finite() {
        return Err(CfsError::Domain("points must be finite".into()));
    }
    let h = setup.green.mollifier_width;
    let parts = stencil_parts(x, potential, setup.params, z, h, &setup.rule);
    let combined: Vec<SpinorMatrix> = parts.iter().map(|p| p.combine(&setup.green)).collect();
    Ok(dirac_plus(&combined, setup.params.m, h))
}

/// `Ψ⁽¹⁾(x)u_μ` for a single frame vector.
pub fn psi1_on_frame(x: FourVector, z: FourVector, mu: usize, potential: &Potential, setup: &EmSetup) -> Result<Spinor> {
    if mu > 3 {
        return Err(invalid("mu", "spinor index must be 0..=3"));
    }
    Ok(psi1_matrix(x, z, potential, setup)?.column(mu))
}

/// `⟨u₁|F⁽¹⁾(x)u₂⟩ = −≺R_ε u₁(x)|Ψ⁽¹⁾(x)u₂≻ − ≺Ψ⁽¹⁾(x)u₁|R_ε u₂(x)≻`
/// for `u_i = P^ε(·, z_i)𝔢_{μ_i}`.
pub fn f1_matrix_element(
    x: FourVector,
    (z1, mu): (FourVector, usize),
    (z2, nu): (FourVector, usize),
    potential: &Potential,
    setup: &EmSetup,
) -> Result<Complex64> {
    if mu > 3 || nu > 3 {
        return Err(invalid("mu", "spinor index must be 0..=3"));
    }
    let p2 = setup.params.with_eps(2.0 * setup.params.eps)?;
    let psi1 = psi1_matrix(x, z1, potential, setup)?;
    let psi2 = if z2 == z1 { psi1 } else { psi1_matrix(x, z2, potential, setup)? };
    let r1 = kernel_p(x, z1, p2)?.matrix;
    let r2 = kernel_p(x, z2, p2)?.matrix;
    let g0 = SpinorMatrix::gamma(0);
    let block = -(r1.adjoint() * g0 * psi2 + psi1.adjoint() * g0 * r2);
    Ok(block[(mu, nu)])
}

/// Block `E_{μν} = ⟨u_μ|F⁽¹⁾(x)u_ν⟩` for the four frame vectors at `z`.
pub fn f1_block(x: FourVector, z: FourVector, potential: &Potential, setup: &EmSetup) -> Result<SpinorMatrix> {
    let p2 = setup.params.with_eps(2.0 * setup.params.eps)?;
    let psi = psi1_matrix(x, z, potential, setup)?;
    let r = kernel_p(x, z, p2)?.matrix;
    let g0 = SpinorMatrix::gamma(0);
    // E = −(R†γ⁰Ψ + Ψ†γ⁰R).
    Ok(-(r.adjoint() * g0 * psi + psi.adjoint() * g0 * r))
}

/// Result of [`calibrate_green`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub green: GreenParams,
    /// `‖(i∂̸ − m)Ψ⁽¹⁾ + A̸R_ε‖ / ‖A̸R_ε‖` over the grid (Frobenius).
    pub relative_residual: f64,
    pub grid: Vec<FourVector>,
}

/// Per grid point: `(□ + m²)` of the surface and volume parts, and the
/// source `A̸R_ε` at the point.
fn cauchy_data(
    grid: &[FourVector],
    potential: &Potential,
    params: RegKernelParams,
    z: FourVector,
    h: f64,
    rule: &ConvolutionRule,
) -> Vec<(SpinorMatrix, SpinorMatrix, SpinorMatrix)> {
    let g = frame_source(potential, params, z);
    grid.iter()
        .map(|&x| {
            let parts = stencil_parts(x, potential, params, z, h, rule);
            let s: Vec<SpinorMatrix> = parts.iter().map(|p| p.surface).collect();
            let v: Vec<SpinorMatrix> = parts.iter().map(|p| p.volume).collect();
            let src = g(x).unwrap_or_else(SpinorMatrix::zero);
            (klein_gordon(&s, params.m, h), klein_gordon(&v, params.m, h), src)
        })
        .collect()
}

fn frob2(m: &SpinorMatrix) -> f64 {
    m.frobenius_norm().powi(2)
}

/// `(i∂̸ − m)Ψ⁽¹⁾u = (□ + m²)(S^∧ * A̸R_εu)`, so the Cauchy residual is
/// `α·Q_s + β·Q_v + A̸R_εu` with `Q = (□ + m²)·(part)`.
fn residual_from_data(data: &[(SpinorMatrix, SpinorMatrix, SpinorMatrix)], alpha: f64, beta: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (qs, qv, src) in data {
        num += frob2(&(*qs * alpha + *qv * beta + *src));
        den += frob2(src);
    }
    (num / den).sqrt()
}

/// Default calibration grid: the support centre, four points displaced
/// inside the support, and two points in its causal future (where the
/// source vanishes but the convolutions do not).
pub fn default_calibration_grid(potential: &Potential) -> Vec<FourVector> {
    let c = potential.support.center;
    let r = potential.support.radius;
    vec![
        c,
        c + FourVector::new(0.3 * r, 0.0, 0.0, 0.0),
        c + FourVector::new(-0.3 * r, 0.0, 0.0, 0.0),
        c + FourVector::new(0.0, 0.3 * r, 0.0, 0.0),
        c + FourVector::new(0.0, 0.0, 0.2 * r, 0.3 * r),
        c + FourVector::new(1.6 * r, 0.4 * r, 0.0, 0.0),
        c + FourVector::new(2.0 * r, 0.0, 0.0, 0.6 * r),
    ]
}

/// Relative Cauchy residual `‖(i∂̸ − m)Ψ⁽¹⁾u + A̸R_εu‖/‖A̸R_εu‖` on `grid`
/// for the given constants.
pub fn cauchy_residual(potential: &Potential, z: FourVector, grid: &[FourVector], setup: &EmSetup) -> Result<f64> {
    setup.rule.validate()?;
    let data = cauchy_data(grid, potential, setup.params, z, setup.green.mollifier_width, &setup.rule);
    let r = residual_from_data(&data, setup.green.alpha, setup.green.beta);
    if !r.is_finite() {
        return Err(invalid("grid", "the source vanishes on the whole grid"));
    }
    Ok(r)
}

/// Least-squares fit of `(α, β)` to the first-order Cauchy identity on
/// `grid` (real unknowns, all 32 real matrix components per grid point).
pub fn calibrate_green(
    params: RegKernelParams,
    potential: &Potential,
    z: FourVector,
    grid: &[FourVector],
    h: f64,
    rule: &ConvolutionRule,
) -> Result<Calibration> {
    require_positive("fd_step", h)?;
    rule.validate()?;
    let data = cauchy_data(grid, potential, params, z, h, rule);
    // Normal equations for min ‖α q_s + β q_v + s‖².
    let (mut ss, mut sv, mut vv, mut sb, mut vb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (qs, qv, src) in &data {
        for i in 0..4 {
            for j in 0..4 {
                let (a, b, c) = (qs[(i, j)], qv[(i, j)], src[(i, j)]);
                ss += a.norm_sqr();
                vv += b.norm_sqr();
                sv += (a.conj() * b).re;
                sb += (a.conj() * c).re;
                vb += (b.conj() * c).re;
            }
        }
    }
    let det = ss * vv - sv * sv;
    if !(det.abs() > 1e-300) {
        return Err(CfsError::NonConvergence("calibration system is singular".into()));
    }
    let alpha = (-sb * vv + vb * sv) / det;
    let beta = (-vb * ss + sb * sv) / det;
    let relative_residual = residual_from_data(&data, alpha, beta);
    if !relative_residual.is_finite() {
        return Err(invalid("grid", "the source vanishes on the whole grid"));
    }
    Ok(Calibration {
        green: GreenParams::new(alpha, beta, h)?,
        relative_residual,
        grid: grid.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_part_support() {
        let gp = GreenParams::new(1.0, 2.0, 0.02).unwrap();
        assert_eq!(green_volume_part(FourVector::new(0.5, 1.0, 0.0, 0.0), 1.0, &gp), 0.0);
        assert_eq!(green_volume_part(FourVector::new(-2.0, 0.0, 0.0, 0.0), 1.0, &gp), 0.0);
        let v = green_volume_part(FourVector::new(2.0, 0.0, 0.0, 0.0), 1.0, &gp);
        assert!((v - 2.0 * 0.576_724_807_756_873_4 / 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn causal_margin_matches_sampling() {
        let ball = SupportBall::new(FourVector::new(1.0, 0.0, 0.0, 0.0), 0.5).unwrap();
        for x in [
            FourVector::new(2.0, 0.3, 0.0, 0.0),
            FourVector::new(0.0, 2.0, 0.0, 0.0),
            FourVector::new(1.4, 1.0, 0.5, 0.0),
        ] {
            let mut best = f64::NEG_INFINITY;
            let n = 60;
            for i in 0..=n {
                for j in 0..=n {
                    // y = c + (q, s·x̂_dir) on the boundary circle in the relevant plane.
                    let th = std::f64::consts::PI * 2.0 * i as f64 / n as f64;
                    let rad = 0.5 * j as f64 / n as f64;
                    let d = x - ball.center;
                    let dir = if d.spatial_norm() > 0.0 { d.spatial_norm() } else { 1.0 };
                    let s = rad * th.cos();
                    let q = rad * th.sin();
                    let y3 = [d.0[1] / dir * s, d.0[2] / dir * s, d.0[3] / dir * s];
                    let yt = ball.center.t() + q;
                    let dx = [x.0[1] - (ball.center.0[1] + y3[0]), x.0[2] - y3[1], x.0[3] - y3[2]];
                    let v = (x.t() - yt) - (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
                    best = best.max(v);
                }
            }
            assert!((best - ball.causal_margin(x)).abs() < 2e-3, "{best} {}", ball.causal_margin(x));
        }
    }
}
