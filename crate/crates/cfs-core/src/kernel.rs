//! Closed-form regularized kernel `P^ε(x,y) = F(−ξ_ε²)·ξ̸_ε + G(−ξ_ε²)·1` of
//! the Dirac sea, with `ξ = x − y`, together with a momentum-space
//! quadrature oracle.
//!
//! Scalar factors (principal square roots):
//! * `G(z) = m²/(2π)³ · K₁(m√z)/√z`
//! * `F(z) = (2/(i m))·G'(z) = i·m²/(2π)³ · K₂(m√z)/z`

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel::{bessel_k012, CutPlanePoint};
use crate::error::{require_positive, CfsError, Result};
use crate::integrate::{adaptive_gk, composite_gauss};
use crate::spinor::{
    complexify, neg_minkowski_square, slash, ComplexFourVector, FourVector, SpinorMatrix,
};

/// `(2π)³`.
pub const TWO_PI_CUBED: f64 = 8.0 * PI * PI * PI;

/// Mass and regularization length of a vacuum instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegKernelParams {
    pub m: f64,
    pub eps: f64,
}

impl RegKernelParams {
    pub fn new(m: f64, eps: f64) -> Result<Self> {
        require_positive("mass", m)?;
        require_positive("epsilon", eps)?;
        Ok(Self { m, eps })
    }

    /// Same mass, regularization replaced by `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.m, eps)
    }
}

/// Kernel matrix together with the scalar data it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub matrix: SpinorMatrix,
    pub f: Complex64,
    pub g: Complex64,
    pub zeta: CutPlanePoint,
    pub xi_eps: ComplexFourVector,
}

impl KernelValue {
    /// Vector component `v^j = F·ξ_ε^j`.
    pub fn v(&self) -> ComplexFourVector {
        ComplexFourVector(self.xi_eps.0.map(|c| self.f * c))
    }

    /// Scalar component `β = G`.
    pub fn beta(&self) -> Complex64 {
        self.g
    }

    /// Spectral norm `|P|₂` in closed form.
    ///
    /// Rotating `ξ⃗` onto the third axis splits `F·ξ̸_ε + G` into two 2×2
    /// blocks with equal singular values, `[[Fτ+G, −Fr], [Fr, G−Fτ]]`
    /// (`τ = ξ⁰ + iε`, `r = |ξ⃗|`), whose largest singular value follows from
    /// the Frobenius norm and the determinant `G² − F²ξ_ε²`.
    pub fn spectral_norm(&self) -> f64 {
        block_spectral_norm(self.f, self.g, self.xi_eps)
    }
}

/// Spectral norm of `F·ξ̸_ε + G·1` from its scalar data (see
/// [`KernelValue::spectral_norm`]).
pub fn block_spectral_norm(f: Complex64, g: Complex64, xi_eps: ComplexFourVector) -> f64 {
    let tau = xi_eps.0[0];
    let r2 = (xi_eps.0[1] * xi_eps.0[1] + xi_eps.0[2] * xi_eps.0[2] + xi_eps.0[3] * xi_eps.0[3]).re;
    let f2 = f.norm_sqr();
    let frob2 = 2.0 * (f2 * (tau.norm_sqr() + r2) + g.norm_sqr());
    let det = (g * g - f * f * xi_eps.minkowski_square()).norm();
    let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (frob2 + disc)).sqrt()
}

/// Both scalar factors `(F(z), G(z))` from a single Bessel evaluation.
pub fn scalar_fg(z: CutPlanePoint, m: f64) -> Result<(Complex64, Complex64)> {
    require_positive("mass", m)?;
    let zv = z.value();
    let sq = zv.sqrt();
    let w = CutPlanePoint::new(sq * m)?;
    let [_, k1, k2] = bessel_k012(w);
    let c = m * m / TWO_PI_CUBED;
    let g = k1 / sq * c;
    let f = Complex64::new(0.0, 1.0) * k2 / zv * c;
    Ok((f, g))
}

/// `G(z) = m²/(2π)³ · K₁(m√z)/√z`.
pub fn scalar_g(z: CutPlanePoint, m: f64) -> Result<Complex64> {
    scalar_fg(z, m).map(|(_, g)| g)
}

/// `F(z) = i·m²/(2π)³ · K₂(m√z)/z`.
pub fn scalar_f(z: CutPlanePoint, m: f64) -> Result<Complex64> {
    scalar_fg(z, m).map(|(f, _)| f)
}

/// `P^ε(x,y)` as a function of `ξ = x − y` alone.
pub fn kernel_p_xi(xi: FourVector, params: RegKernelParams) -> Result<KernelValue> {
    if !xi.is_finite() {
        return Err(CfsError::Domain(format!("non-finite separation {xi:?}")));
    }
    let xi_eps = complexify(xi, params.eps)?;
    let zeta = neg_minkowski_square(xi_eps)?;
    let (f, g) = scalar_fg(zeta, params.m)?;
    let mut matrix = slash(xi_eps) * f;
    for i in 0..4 {
        matrix.0[i][i] += g;
    }
    Ok(KernelValue {
        matrix,
        f,
        g,
        zeta,
        xi_eps,
    })
}

/// `P^ε(x,y)`.
pub fn kernel_p(x: FourVector, y: FourVector, params: RegKernelParams) -> Result<KernelValue> {
    kernel_p_xi(x - y, params)
}

/// Settings of the momentum-space oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            max_panels: 20_000,
        }
    }
}

/// Angular integrals `(∫_{-1}^{1} e^{iau} du, ∫_{-1}^{1} u e^{iau} du)` by
/// composite Gauss–Legendre quadrature (panel count grows with `a`).
fn polar_moments(a: f64) -> (Complex64, Complex64) {
    if a == 0.0 {
        return (Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let panels = 1 + (a.abs() / 3.0).ceil() as usize;
    let (us, ws) = composite_gauss(-1.0, 1.0, panels, 16);
    let mut m0 = Complex64::new(0.0, 0.0);
    let mut m1 = Complex64::new(0.0, 0.0);
    for (u, w) in us.iter().zip(&ws) {
        let e = Complex64::from_polar(*w, a * u);
        m0 += e;
        m1 += e * *u;
    }
    (m0, m1)
}

/// Independent evaluation of `P^ε(x,y)` from its momentum representation
///
/// `P^ε(x,y) = ∫ d³k/(2π)⁴ · (k̸ + m)/(2ω) · e^{−εω} e^{−ik·ξ}`, `k⁰ = −ω`,
///
/// reduced by rotational symmetry to a radial × polar integral. Returns the
/// matrix and an absolute error estimate (entrywise).
pub fn kernel_p_momentum_oracle(
    x: FourVector,
    y: FourVector,
    params: RegKernelParams,
    settings: OracleSettings,
) -> Result<(SpinorMatrix, f64)> {
    let xi = x - y;
    let (t, r) = (xi.t(), xi.spatial_norm());
    let (m, eps) = (params.m, params.eps);
    let k_max = m + 50.0 / eps;
    let pref = 2.0 * PI / (2.0 * PI).powi(4);
    // Components: β, v⁰, v_∥ (complex, stored re/im).
    let integrand = |k: f64, out: &mut [f64]| {
        let omega = (k * k + m * m).sqrt();
        let damp = (-eps * omega).exp() * k * k * pref;
        let phase = Complex64::from_polar(damp, omega * t);
        let (m0, m1) = polar_moments(k * r);
        let beta = phase * m0 * (m / (2.0 * omega));
        let v0 = phase * m0 * (-0.5);
        let vp = phase * m1 * (0.5 * k / omega);
        out.copy_from_slice(&[beta.re, beta.im, v0.re, v0.im, vp.re, vp.im]);
    };
    let initial = (2.0 + k_max * (r + t.abs() + eps) / 20.0).min(4000.0) as usize;
    let breaks: Vec<f64> = (0..=initial)
        .map(|j| k_max * j as f64 / initial as f64)
        .collect();
    let res = adaptive_gk(integrand, &breaks, 6, settings.abs_tol, 0.0, settings.max_panels);
    if !res.converged {
        return Err(CfsError::NonConvergence(format!(
            "momentum oracle at xi = {:?}: error {:.3e} after {} panels",
            xi.0, res.error, res.panels
        )));
    }
    let v = &res.value;
    let beta = Complex64::new(v[0], v[1]);
    let v0 = Complex64::new(v[2], v[3]);
    let vp = Complex64::new(v[4], v[5]);
    let mut vec = [v0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    if r > 0.0 {
        for j in 1..4 {
            vec[j] = vp * (xi[j] / r);
        }
    }
    let mut p = slash(ComplexFourVector(vec));
    for i in 0..4 {
        p.0[i][i] += beta;
    }
    Ok((p, 3.0 * res.error))
}

/// Coincidence eigenvalues `(ν⁻, ν⁺)` defined by
/// `2π·P^{2ε}(x,x) = diag(ν⁻, ν⁻, ν⁺, ν⁺)`.
pub fn nu_pm(params: RegKernelParams) -> Result<(f64, f64)> {
    let p = kernel_p_xi(FourVector::ZERO, params.with_eps(2.0 * params.eps)?)?.matrix;
    let nu_minus = 2.0 * PI * p.0[0][0].re;
    let nu_plus = 2.0 * PI * p.0[3][3].re;
    if !(nu_minus < 0.0 && nu_plus > 0.0) {
        return Err(CfsError::Invariant(format!(
            "coincidence eigenvalues have wrong signs: nu- = {nu_minus}, nu+ = {nu_plus}"
        )));
    }
    Ok((nu_minus, nu_plus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> RegKernelParams {
        RegKernelParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn scalar_values_at_one() {
        let z = CutPlanePoint::real(1.0).unwrap();
        let g = scalar_g(z, 1.0).unwrap();
        let f = scalar_f(z, 1.0).unwrap();
        assert!((g.re - 2.42655e-3).abs() < 1e-8 && g.im == 0.0);
        assert!((f.im - 6.55045e-3).abs() < 1e-8 && f.re == 0.0);
    }

    #[test]
    fn coincidence_matrix() {
        let p = kernel_p_xi(FourVector::ZERO, p1()).unwrap().matrix;
        let d = [-4.1239e-3, -4.1239e-3, 8.9770e-3, 8.9770e-3];
        for i in 0..4 {
            assert!((p.0[i][i].re - d[i]).abs() < 1e-7);
            for j in 0..4 {
                if i != j {
                    assert_eq!(p.0[i][j].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn closed_form_spectral_norm() {
        for &(t, x, y, z, e) in &[(0.3, 0.2, -1.0, 0.5, 0.1), (0.0, 0.0, 0.0, 0.0, 1.0), (-2.0, 0.1, 0.0, 0.3, 0.4)] {
            let k = kernel_p_xi(FourVector::new(t, x, y, z), RegKernelParams::new(1.3, e).unwrap()).unwrap();
            let generic = crate::spinor::spectral_norm(&k.matrix);
            assert!((k.spectral_norm() - generic).abs() < 1e-12 * generic);
        }
    }

    #[test]
    fn nu_values() {
        let (a, b) = nu_pm(RegKernelParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!((a + 2.5911e-2).abs() < 1e-6);
        assert!((b - 5.6404e-2).abs() < 1e-6);
    }

    #[test]
    fn oracle_at_coincidence() {
        let (p, err) = kernel_p_momentum_oracle(
            FourVector::ZERO,
            FourVector::ZERO,
            p1(),
            OracleSettings::default(),
        )
        .unwrap();
        let exact = kernel_p_xi(FourVector::ZERO, p1()).unwrap().matrix;
        assert!((p - exact).max_abs() < 1e-9, "{err}");
    }
}
