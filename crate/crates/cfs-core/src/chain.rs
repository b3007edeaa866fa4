//! Closed chain `A_{xy} = P^{2ε}(x,y)·P^{2ε}(y,x)`, its eigenvalues
//! `λ± = a ± √b` (each with multiplicity two), the causal classification
//! and the Lagrangian `L = 4|b|₊`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{require_positive, CfsError, Result};
use crate::kernel::{kernel_p, kernel_p_xi, RegKernelParams};
use crate::linalg::{complex_eigenvalues, sort_eigenvalues};
use crate::spinor::{FourVector, SpinorMatrix};

/// Scalars `(a, b)` and eigenvalues of a closed chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainInvariants {
    pub a: f64,
    pub b: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

/// Causal relation of two points in the regularized sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CausalClass {
    Timelike,
    Spacelike,
    Lightlike,
}

impl CausalClass {
    /// One-letter code used in CSV output.
    pub fn code(self) -> char {
        match self {
            CausalClass::Timelike => 'T',
            CausalClass::Spacelike => 'S',
            CausalClass::Lightlike => 'L',
        }
    }
}

/// Width of the band `|b| ≤ LIGHTLIKE_BAND·a²` classified as lightlike.
pub const LIGHTLIKE_BAND: f64 = 1e-14;

impl ChainInvariants {
    /// Assemble invariants from `(a, b)`.
    pub fn from_ab(a: f64, b: f64) -> Self {
        let root = Complex64::new(b, 0.0).sqrt();
        Self {
            a,
            b,
            lambda_plus: Complex64::new(a, 0.0) + root,
            lambda_minus: Complex64::new(a, 0.0) - root,
        }
    }

    pub fn classify(&self) -> CausalClass {
        if self.b.abs() <= LIGHTLIKE_BAND * self.a * self.a {
            CausalClass::Lightlike
        } else if self.b > 0.0 {
            CausalClass::Timelike
        } else {
            CausalClass::Spacelike
        }
    }

    /// `L = 4·max(b, 0)`.
    pub fn lagrangian(&self) -> f64 {
        4.0 * self.b.max(0.0)
    }

    /// `(|λ₊| − |λ₋|)²`, evaluated from the eigenvalues.
    pub fn lagrangian_from_eigenvalues(&self) -> f64 {
        (self.lambda_plus.norm() - self.lambda_minus.norm()).powi(2)
    }
}

/// `(a, b)` from the kernel scalars at `ξ = (t, r)` with effective
/// regularization `eps_eff` (`F`, `G` already evaluated at `−ξ_{eps_eff}²`).
pub fn chain_ab(f: Complex64, g: Complex64, t: f64, r: f64, eps_eff: f64) -> (f64, f64) {
    let f2 = f.norm_sqr();
    let g2 = g.norm_sqr();
    // ξ_ε·ξ̄_ε = t² + ε² − r² (bilinear Minkowski product with the conjugate).
    let herm = t * t + eps_eff * eps_eff - r * r;
    let tau = Complex64::new(t, eps_eff);
    let xi2 = tau * tau - r * r;
    let fg = f * g.conj();
    let a = f2 * herm + g2;
    let b = 2.0 * (fg * fg * xi2).re + 2.0 * f2 * g2 * herm
        - 4.0 * f2 * f2 * eps_eff * eps_eff * r * r;
    (a, b)
}

/// `A_{xy} = P^{2ε}(x,y)·P^{2ε}(y,x)`.
pub fn closed_chain(x: FourVector, y: FourVector, params: RegKernelParams) -> Result<SpinorMatrix> {
    let p2 = params.with_eps(2.0 * params.eps)?;
    Ok(kernel_p(x, y, p2)?.matrix * kernel_p(y, x, p2)?.matrix)
}

/// Closed-form chain invariants for the pair `(x, y)`.
pub fn chain_invariants(
    x: FourVector,
    y: FourVector,
    params: RegKernelParams,
) -> Result<ChainInvariants> {
    let eps2 = 2.0 * params.eps;
    let xi = x - y;
    let k = kernel_p_xi(xi, params.with_eps(eps2)?)?;
    let (a, b) = chain_ab(k.f, k.g, xi.t(), xi.spatial_norm(), eps2);
    Ok(ChainInvariants::from_ab(a, b))
}

/// `L^ε(x, y) = 4|b|₊`.
pub fn lagrangian(x: FourVector, y: FourVector, params: RegKernelParams) -> Result<f64> {
    Ok(chain_invariants(x, y, params)?.lagrangian())
}

/// `(2π)²·P^{ε₁+ε₂}(x,y)·P^{ε₁+ε₂}(y,x)`: its spectrum is the non-zero
/// spectrum of the product of the local correlation operators at
/// regularizations `ε₁` (at `x`) and `ε₂` (at `y`).
pub fn mixed_chain(
    x: FourVector,
    y: FourVector,
    eps1: f64,
    eps2: f64,
    m: f64,
) -> Result<SpinorMatrix> {
    require_positive("epsilon_1", eps1)?;
    require_positive("epsilon_2", eps2)?;
    let p = RegKernelParams::new(m, eps1 + eps2)?;
    let prod = kernel_p(x, y, p)?.matrix * kernel_p(y, x, p)?.matrix;
    Ok(prod * (4.0 * PI * PI))
}

/// Chain invariants of the mixed chain with effective regularization
/// `ε₁ + ε₂`, normalized like [`chain_invariants`] (without the `(2π)²`).
pub fn mixed_chain_invariants(t: f64, r: f64, eps_sum: f64, m: f64) -> Result<ChainInvariants> {
    let k = kernel_p_xi(FourVector::new(t, r, 0.0, 0.0), RegKernelParams::new(m, eps_sum)?)?;
    let (a, b) = chain_ab(k.f, k.g, t, r, eps_sum);
    Ok(ChainInvariants::from_ab(a, b))
}

/// Eigenvalues of a 4×4 matrix from a generic (Schur) eigensolver, sorted
/// by descending modulus, then real part, then imaginary part.
pub fn generic_eigenvalues(m: &SpinorMatrix) -> Result<Vec<Complex64>> {
    let d = DMatrix::from_row_slice(4, 4, &m.to_flat());
    let mut ev = complex_eigenvalues(&d)
        .ok_or_else(|| CfsError::NonConvergence("Schur iteration on a 4x4 chain".into()))?;
    sort_eigenvalues(&mut ev, 1e-10);
    Ok(ev)
}
