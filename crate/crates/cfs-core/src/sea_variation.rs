//! Variations of the regularized Dirac sea, realized on Gram data.
//!
//! The local correlation operator at `x` with regularization `ε` is
//! `F^ε(x) = −(2π)²·U γ⁰ U†` where `U: ℂ⁴ → H`, `U a = P^ε(·,x) a`, and
//! inner products of such vectors are closed-form kernel values:
//! `⟨P^{ε₁}(·,x)a | P^{ε₂}(·,y)b⟩ = −(1/2π)·≺a | P^{ε₁+ε₂}(x,y) b≻`.
//! Operators on the infinite-dimensional solution space are therefore
//! never materialized; everything reduces to 4×4 and 8×8 matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, require_positive, CfsError, Result};
use crate::integrate::{adaptive_gk, gauss_legendre};
use crate::kernel::{kernel_p, nu_pm, RegKernelParams};
use crate::linalg::{complex_eigenvalues, hermitian_eigen_dmatrix, linear_fit, sort_eigenvalues};
use crate::quadrature::{ell_varied, integrate_reduced, IntegralKind, QuadConfig, QuadratureReport};
use crate::spinor::{basis_spinor, spin_product, FourVector, Spinor, SIGNATURE};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// `⟨P^{ε₁}(·,x)a | P^{ε₂}(·,y)b⟩ = −(1/2π)·≺a | P^{ε₁+ε₂}(x,y) b≻`.
pub fn mixed_correlation(
    x: FourVector,
    y: FourVector,
    eps1: f64,
    eps2: f64,
    a: &Spinor,
    b: &Spinor,
    m: f64,
) -> Result<Complex64> {
    require_positive("epsilon_1", eps1)?;
    require_positive("epsilon_2", eps2)?;
    let p = kernel_p(x, y, RegKernelParams::new(m, eps1 + eps2)?)?.matrix;
    Ok(spin_product(a, &p.apply(b)) * (-1.0 / (2.0 * PI)))
}

/// 4×4 block `(⟨P^{ε₁}(·,x)𝔢_μ | P^{ε₂}(·,y)𝔢_ν⟩)_{μν} = −(1/2π)·γ⁰P^{ε₁+ε₂}(x,y)`.
fn correlation_block(x: FourVector, y: FourVector, eps1: f64, eps2: f64, m: f64) -> Result<DMatrix<Complex64>> {
    let p = kernel_p(x, y, RegKernelParams::new(m, eps1 + eps2)?)?.matrix;
    Ok(DMatrix::from_fn(4, 4, |i, j| p.0[i][j] * (SIGNATURE[i] as f64 * -1.0 / (2.0 * PI))))
}

/// Gram matrix of the eight vectors `{P^{ε₁}(·,x)𝔢_μ} ∪ {P^{ε₂}(·,y)𝔢_μ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBlock {
    pub matrix: DMatrix<Complex64>,
    pub eps1: f64,
    pub eps2: f64,
}

impl GramBlock {
    /// Gram block for frames at `x` (regularization `ε₁`) and `y` (`ε₂`).
    /// Fails if the matrix is indefinite beyond `−1e-10·trace`.
    pub fn new(x: FourVector, eps1: f64, y: FourVector, eps2: f64, m: f64) -> Result<Self> {
        require_positive("epsilon_1", eps1)?;
        require_positive("epsilon_2", eps2)?;
        let blocks = [
            [correlation_block(x, x, eps1, eps1, m)?, correlation_block(x, y, eps1, eps2, m)?],
            [correlation_block(y, x, eps2, eps1, m)?, correlation_block(y, y, eps2, eps2, m)?],
        ];
        let matrix = DMatrix::from_fn(8, 8, |i, j| blocks[i / 4][j / 4][(i % 4, j % 4)]);
        let g = Self { matrix, eps1, eps2 };
        g.check_psd()?;
        Ok(g)
    }

    /// Smallest eigenvalue relative to the trace.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        let (vals, _) = hermitian_eigen_dmatrix(&self.matrix);
        let tr: f64 = (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).sum();
        vals[0] / tr
    }

    fn check_psd(&self) -> Result<()> {
        let rel = self.min_relative_eigenvalue();
        if rel < -1e-10 {
            return Err(CfsError::Invariant(format!(
                "Gram matrix indefinite: smallest eigenvalue {rel:.3e} x trace"
            )));
        }
        Ok(())
    }

    fn block(&self, bi: usize, bj: usize) -> DMatrix<Complex64> {
        self.matrix.view((4 * bi, 4 * bj), (4, 4)).into_owned()
    }
}

/// Positive square root of a Hermitian positive semidefinite matrix
/// (negative rounding eigenvalues clipped to zero).
fn psd_sqrt(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigen_dmatrix(a);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

fn gamma0_dm() -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            Complex64::new(SIGNATURE[i] as f64, 0.0)
        } else {
            C0
        }
    })
}

/// `‖F^{ε₁}(x) − F^{ε₂}(x)‖`, exactly, from the 8×8 Gram block:
/// `F₁ − F₂ = −(2π)²·W J W†` with `W = [U V]`, `J = diag(γ⁰, −γ⁰)`, whose
/// non-zero spectrum is that of `Gram^{1/2} J Gram^{1/2}`.
pub fn op_norm_difference(x: FourVector, eps1: f64, eps2: f64, m: f64) -> Result<f64> {
    let g = GramBlock::new(x, eps1, x, eps2, m)?;
    let s = psd_sqrt(&g.matrix);
    let j = DMatrix::from_fn(8, 8, |i, k| {
        if i == k {
            let sgn = SIGNATURE[i % 4] as f64 * if i < 4 { 1.0 } else { -1.0 };
            Complex64::new(sgn, 0.0)
        } else {
            C0
        }
    });
    let h = &s * j * &s;
    let (vals, _) = hermitian_eigen_dmatrix(&h);
    let max = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(4.0 * PI * PI * max)
}

/// Non-zero spectrum of `F^{ε₁}(x)·F^{ε₂}(y)` from its representation on
/// the joint 8-dimensional frame: `F₁F₂W = W·M₁M₂` with
/// `M₁ = [−(2π)²γ⁰U†W; 0]`, `M₂ = [0; −(2π)²γ⁰V†W]`. Returns the four
/// eigenvalues of largest modulus, sorted.
pub fn product_spectrum_oracle(
    x: FourVector,
    y: FourVector,
    eps1: f64,
    eps2: f64,
    m: f64,
) -> Result<Vec<Complex64>> {
    let g = GramBlock::new(x, eps1, y, eps2, m)?;
    let c = Complex64::new(-4.0 * PI * PI, 0.0);
    let g0 = gamma0_dm();
    let mut m1 = DMatrix::zeros(8, 8);
    let mut m2 = DMatrix::zeros(8, 8);
    for bj in 0..2 {
        let top = &g0 * g.block(0, bj) * c;
        let bottom = &g0 * g.block(1, bj) * c;
        m1.view_mut((0, 4 * bj), (4, 4)).copy_from(&top);
        m2.view_mut((4, 4 * bj), (4, 4)).copy_from(&bottom);
    }
    let prod = m1 * m2;
    let mut ev = complex_eigenvalues(&prod)
        .ok_or_else(|| CfsError::NonConvergence("Schur iteration on the 8x8 product".into()))?;
    sort_eigenvalues(&mut ev, 1e-10);
    ev.truncate(4);
    Ok(ev)
}

/// One vector `P^{e}(·, z)·a` of a discretization frame.
#[derive(Debug, Clone, Copy)]
struct FrameVector {
    eps: f64,
    z: FourVector,
    a: Spinor,
}

/// Cross-check of [`op_norm_difference`] on a dense finite basis: the
/// eight joint frame vectors plus `n − 8` further vectors `P^{ε₁}(·,z_i)a_i`
/// at random points `z_i` and random spinors `a_i`. The operator
/// `F₁ − F₂` has its range inside this span, so its norm follows from the
/// generalized eigenproblem `M v = μ S v` (with `S` the Gram matrix of the
/// frame and `M_ij = ⟨f_i|(F₁−F₂)f_j⟩`), solved with eigenvalues of `S`
/// below `1e-12·max` truncated.
pub fn discretized_norm_difference(
    x: FourVector,
    eps1: f64,
    eps2: f64,
    m: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n < 8 {
        return Err(invalid("frame_size", "need at least the 8 joint frame vectors"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame = Vec::with_capacity(n);
    for mu in 0..4 {
        frame.push(FrameVector { eps: eps1, z: x, a: basis_spinor(mu) });
    }
    for mu in 0..4 {
        frame.push(FrameVector { eps: eps2, z: x, a: basis_spinor(mu) });
    }
    while frame.len() < n {
        let offset: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let a: Spinor = std::array::from_fn(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        frame.push(FrameVector {
            eps: eps1,
            z: x + FourVector(offset),
            a,
        });
    }
    // c1[j][μ] = ⟨P^{ε₁}(·,x)𝔢_μ | f_j⟩, c2 likewise for ε₂.
    let coeffs = |eps: f64| -> Result<Vec<Spinor>> {
        frame
            .iter()
            .map(|f| {
                let mut c = [C0; 4];
                for (mu, slot) in c.iter_mut().enumerate() {
                    *slot = mixed_correlation(x, f.z, eps, f.eps, &basis_spinor(mu), &f.a, m)?;
                }
                Ok(c)
            })
            .collect()
    };
    let c1 = coeffs(eps1)?;
    let c2 = coeffs(eps2)?;
    let pref = -4.0 * PI * PI;
    let mut mm = DMatrix::zeros(n, n);
    let mut ss = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = spin_product(&c1[i], &c1[j]) - spin_product(&c2[i], &c2[j]);
            mm[(i, j)] = d * pref;
            let (fi, fj) = (&frame[i], &frame[j]);
            ss[(i, j)] = mixed_correlation(fi.z, fj.z, fi.eps, fj.eps, &fi.a, &fj.a, m)?;
        }
    }
    let (svals, svecs) = hermitian_eigen_dmatrix(&ss);
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&k| svals[k] > 1e-12 * smax).collect();
    let q = DMatrix::from_fn(n, keep.len(), |i, k| svecs[(i, keep[k])] / svals[keep[k]].sqrt());
    let reduced = q.adjoint() * mm * &q;
    let (vals, _) = hermitian_eigen_dmatrix(&reduced);
    Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// `L¹(ℝ³)` norm of the initial data of a normalized frame vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    pub mu: usize,
    pub value: f64,
    pub abs_err: f64,
    pub radius: f64,
}

/// `‖ψ_μ‖_{L¹}` for `ψ_μ(z⃗) = (2π/√|ν_μ|)·P^ε((0,z⃗), 0)𝔢_μ`, the `t = 0`
/// data of the unit-norm frame vectors, integrated over the ball of the
/// given radius in spherical coordinates (adaptive radial rule, Gauss
/// rule in `cos θ`, trapezoidal rule in `φ`).
pub fn l1_frame_norms_radius(params: RegKernelParams, radius: f64) -> Result<[L1Norm; 4]> {
    require_positive("radius", radius)?;
    let (num, nup) = nu_pm(params)?;
    let (cx, cw) = gauss_legendre(8);
    let nphi = 8;
    let eval = |r: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (c, w) in cx.iter().zip(&cw) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..nphi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                let z = FourVector::new(0.0, r * s * phi.cos(), r * s * phi.sin(), r * c);
                let p = match kernel_p(z, FourVector::ZERO, params) {
                    Ok(p) => p.matrix,
                    Err(_) => {
                        out.iter_mut().for_each(|v| *v = f64::NAN);
                        return;
                    }
                };
                let wt = w * (2.0 * PI / nphi as f64) * r * r;
                for (mu, o) in out.iter_mut().enumerate() {
                    *o += wt * crate::spinor::spinor_norm(&p.column(mu));
                }
            }
        }
    };
    let e = params.eps;
    let mut breaks = vec![0.0];
    for b in [e, 4.0 * e, 1.0 / params.m, 4.0 / params.m, 16.0 / params.m] {
        if b > *breaks.last().unwrap() && b < radius {
            breaks.push(b);
        }
    }
    breaks.push(radius);
    let res = adaptive_gk(eval, &breaks, 4, 0.0, 1e-9, 20_000);
    if !res.converged || res.value.iter().any(|v| !v.is_finite()) {
        return Err(CfsError::NonConvergence(format!(
            "L1 frame norm: error {:.3e} after {} panels",
            res.error, res.panels
        )));
    }
    Ok(std::array::from_fn(|mu| {
        let nu = if mu < 2 { num } else { nup };
        let scale = 2.0 * PI / nu.abs().sqrt();
        L1Norm {
            mu,
            value: scale * res.value[mu],
            abs_err: scale * res.error,
            radius,
        }
    }))
}

/// Default truncation radius of [`l1_frame_norms`]: the integrand decays
/// like `e^{−m r}`, so `40/m` leaves a relative tail of order `e^{−40}`.
pub fn default_l1_radius(params: RegKernelParams) -> f64 {
    40.0 / params.m + 10.0 * params.eps
}

/// `‖ψ_μ‖_{L¹}` for μ = 0..3 at the default truncation radius.
pub fn l1_frame_norms(params: RegKernelParams) -> Result<[L1Norm; 4]> {
    l1_frame_norms_radius(params, default_l1_radius(params))
}

/// One row of the `L⁴`/`L¹` bound check for a frame vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L4BoundCheck {
    pub mu: usize,
    /// `‖R_ε u_ψ‖_{L⁴} = (2π/√|ν_μ|)·(∫|P^{2ε}(y,0)𝔢_μ|⁴ d⁴y)^{1/4}`.
    pub lhs: f64,
    /// `2π·‖P^ε(0,·)‖_{L⁴}·‖ψ_μ‖_{L¹}`.
    pub rhs: f64,
}

/// Spot check of `‖R_ε u_ψ‖_{L⁴} ≤ 2π·‖P^ε(0,·)‖_{L⁴}·‖ψ‖_{L¹}` for the two
/// distinct frame columns (μ = 0 and μ = 2; the others coincide by
/// symmetry). In this kernel normalization the equal-time composition is
/// `∫P^ε(x,(0,z⃗))γ⁰P^ε((0,z⃗),y)d³z = −(1/2π)·P^{2ε}(x,y)`, so a solution
/// is recovered from its initial data as `R_ε u_ψ = −2π∫P^ε(·,(0,z⃗))γ⁰ψ d³z`,
/// which produces the factor `2π`. Integral tails are added to the left
/// side and ignored on the right side so that the comparison is
/// conservative.
pub fn l4_bound_check(params: RegKernelParams, cfg: &QuadConfig) -> Result<Vec<L4BoundCheck>> {
    let (num, nup) = nu_pm(params)?;
    let l1 = l1_frame_norms(params)?;
    // ∫|P^ε|₂⁴ is the p4 integral at half the regularization.
    let half = params.with_eps(0.5 * params.eps)?;
    let p4 = integrate_reduced(IntegralKind::P4, half, cfg)?.report;
    let p_l4 = (p4.value - p4.abs_error_estimate).max(0.0).powf(0.25);
    let mut out = Vec::new();
    for mu in [0usize, 2] {
        let col = integrate_reduced(IntegralKind::P4Column { mu }, params, cfg)?.report;
        let nu = if mu < 2 { num } else { nup };
        let lhs = 2.0 * PI / nu.abs().sqrt()
            * (col.value + col.abs_error_estimate + col.tail_bound).powf(0.25);
        let rhs = 2.0 * PI * p_l4 * (l1[mu].value - l1[mu].abs_err);
        out.push(L4BoundCheck { mu, lhs, rhs });
    }
    Ok(out)
}

/// One row of the Hölder sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderRow {
    pub lambda: f64,
    /// `‖F^{ε+λ}(x) − F^ε(x)‖`.
    pub df_norm: f64,
    /// `|ℓ(λ) − ℓ(0)|`.
    pub d_ell: f64,
    /// `ℓ(λ)`.
    pub ell_value: f64,
    /// Log-log slope fitted to the rows up to and including this one
    /// (NaN while fewer than two non-zero rows are available).
    pub alpha_fit_running: f64,
}

/// Result of the Hölder sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderSweep {
    pub rows: Vec<HolderRow>,
    pub ell_zero: QuadratureReport,
    /// `ln|Δℓ| = intercept + α̂·ln‖ΔF‖`: `(intercept, α̂, R²)`.
    pub fit: Option<(f64, f64, f64)>,
    /// `max |Δℓ − C‖ΔF‖^α̂| / (C‖ΔF‖^α̂)` over the fitted rows.
    pub max_rel_residual: f64,
}

fn fit_rows(rows: &[HolderRow]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.df_norm > 0.0 && r.d_ell > 0.0)
        .map(|r| (r.df_norm.ln(), r.d_ell.ln()))
        .collect();
    let distinct = pts.iter().any(|p| (p.0 - pts[0].0).abs() > 1e-12);
    if pts.len() < 2 || !distinct {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(linear_fit(&xs, &ys))
}

/// Hölder sweep of `ℓ` along the regularization rescaling `ε → ε + λ`.
/// Rows are evaluated concurrently and assembled in input order.
pub fn holder_sweep(
    lambdas: &[f64],
    params: RegKernelParams,
    cfg: &QuadConfig,
    x: FourVector,
) -> Result<HolderSweep> {
    for &l in lambdas {
        if !(params.eps + l > 0.0) || !l.is_finite() {
            return Err(invalid("lambda_list", format!("epsilon + lambda must be positive, got lambda = {l}")));
        }
    }
    let ell_zero = ell_varied(0.0, params, cfg)?;
    let raw: Vec<Result<(f64, f64, f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            if l == 0.0 {
                return Ok((l, 0.0, 0.0, ell_zero.value));
            }
            let df = op_norm_difference(x, params.eps + l, params.eps, params.m)?;
            let ell = ell_varied(l, params, cfg)?;
            Ok((l, df, (ell.value - ell_zero.value).abs(), ell.value))
        })
        .collect();
    let mut rows: Vec<HolderRow> = Vec::with_capacity(lambdas.len());
    for r in raw {
        let (lambda, df_norm, d_ell, ell_value) = r?;
        rows.push(HolderRow {
            lambda,
            df_norm,
            d_ell,
            ell_value,
            alpha_fit_running: f64::NAN,
        });
        let fit = fit_rows(&rows);
        rows.last_mut().unwrap().alpha_fit_running = fit.map_or(f64::NAN, |f| f.1);
    }
    let fit = fit_rows(&rows);
    let max_rel_residual = match fit {
        Some((c, alpha, _)) => rows
            .iter()
            .filter(|r| r.df_norm > 0.0 && r.d_ell > 0.0)
            .map(|r| {
                let model = (c + alpha * r.df_norm.ln()).exp();
                (r.d_ell - model).abs() / model
            })
            .fold(0.0, f64::max),
        None => f64::NAN,
    };
    Ok(HolderSweep {
        rows,
        ell_zero,
        fit,
        max_rel_residual,
    })
}

/// Default sweep `λ ∈ ε·{±0.2, ±0.1, ±0.05, ±0.025}`.
pub fn default_lambda_list(eps: f64) -> Vec<f64> {
    [0.2, -0.2, 0.1, -0.1, 0.05, -0.05, 0.025, -0.025]
        .iter()
        .map(|f| f * eps)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{generic_eigenvalues, mixed_chain};

    #[test]
    fn coincidence_gram_reproduces_nu() {
        // Eigenvalues of F^ε(x) are those of −(2π)²γ⁰·G_UU = 2π·P^{2ε}(x,x).
        let p = RegKernelParams::new(1.0, 0.5).unwrap();
        let g = GramBlock::new(FourVector::ZERO, 0.5, FourVector::ZERO, 0.5, 1.0).unwrap();
        let (num, nup) = nu_pm(p).unwrap();
        let f = gamma0_dm() * g.block(0, 0) * Complex64::new(-4.0 * PI * PI, 0.0);
        assert!((f[(0, 0)].re - num).abs() < 1e-14);
        assert!((f[(3, 3)].re - nup).abs() < 1e-14);
    }

    #[test]
    fn equal_regularizations_have_zero_distance() {
        let d = op_norm_difference(FourVector::ZERO, 0.1, 0.1, 1.0).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn product_spectrum_matches_mixed_chain() {
        let x = FourVector::new(0.2, 0.1, -0.3, 0.0);
        let y = FourVector::new(-0.1, 0.4, 0.2, 0.1);
        let oracle = product_spectrum_oracle(x, y, 0.1, 0.15, 1.0).unwrap();
        let direct = generic_eigenvalues(&mixed_chain(x, y, 0.1, 0.15, 1.0).unwrap()).unwrap();
        let scale = direct[0].norm();
        for (a, b) in oracle.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-9 * scale, "{a} {b}");
        }
    }
}
