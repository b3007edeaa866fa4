//! Minkowski vectors, ε-complexified vectors and the Dirac algebra in the
//! standard (Dirac) representation, metric signature (+,-,-,-).

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::bessel::CutPlanePoint;
use crate::error::{require_positive, CfsError, Result};
use crate::linalg::hermitian_eigen;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Diagonal of γ⁰, i.e. the signature vector `s = (1, 1, -1, -1)`.
pub const SIGNATURE: [i8; 4] = [1, 1, -1, -1];

/// Minkowski metric diagonal.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// A Dirac spinor (column vector in ℂ⁴).
pub type Spinor = [Complex64; 4];

/// Real four-vector `(x⁰, x¹, x², x³)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self([t, x, y, z])
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.0[0]
    }

    /// Euclidean length of the spatial part.
    #[inline]
    pub fn spatial_norm(&self) -> f64 {
        (self.0[1] * self.0[1] + self.0[2] * self.0[2] + self.0[3] * self.0[3]).sqrt()
    }

    /// `ξ·ξ = (ξ⁰)² − |ξ⃗|²`.
    #[inline]
    pub fn minkowski_square(&self) -> f64 {
        self.0[0] * self.0[0] - self.spatial_norm().powi(2)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }

    /// Unit vector along axis `j`.
    pub fn axis(j: usize) -> Self {
        let mut v = [0.0; 4];
        v[j] = 1.0;
        Self(v)
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|j| self.0[j] + o.0[j]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|j| self.0[j] - o.0[j]))
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Complex four-vector, e.g. `ξ_ε = (ξ⁰ + iε, ξ⃗)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFourVector(pub [Complex64; 4]);

impl ComplexFourVector {
    pub fn from_real(v: FourVector) -> Self {
        Self(v.0.map(|x| Complex64::new(x, 0.0)))
    }

    /// Bilinear Minkowski square `v·v` (no complex conjugation).
    pub fn minkowski_square(&self) -> Complex64 {
        let c = &self.0;
        c[0] * c[0] - c[1] * c[1] - c[2] * c[2] - c[3] * c[3]
    }

    /// Bilinear Minkowski product `v·w`.
    pub fn dot(&self, w: &ComplexFourVector) -> Complex64 {
        let (a, b) = (&self.0, &w.0);
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }
}

/// `ξ_ε = (ξ⁰ + iε, ξ⃗)`.
pub fn complexify(xi: FourVector, eps: f64) -> Result<ComplexFourVector> {
    require_positive("epsilon", eps)?;
    let mut v = ComplexFourVector::from_real(xi);
    v.0[0].im += eps;
    Ok(v)
}

/// `−ξ_ε² = −(ξ⁰ + iε)² + |ξ⃗|²`, which lies in the cut plane for ε > 0.
pub fn neg_minkowski_square(xi_eps: ComplexFourVector) -> Result<CutPlanePoint> {
    let c = &xi_eps.0;
    let spatial = c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
    let z = spatial - c[0] * c[0];
    CutPlanePoint::new(z).map_err(|_| {
        CfsError::Invariant(format!(
            "-xi_eps^2 = {z} landed on the cut; the time component needs a positive imaginary shift"
        ))
    })
}

/// 4×4 complex matrix with Dirac-algebra helpers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorMatrix(pub [[Complex64; 4]; 4]);

impl SpinorMatrix {
    pub const fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::diagonal([ONE; 4])
    }

    pub fn diagonal(d: [Complex64; 4]) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = d[i];
        }
        m
    }

    /// γ^j, j = 0..3, Dirac representation:
    /// γ⁰ = diag(1, 1, −1, −1), γ^α = [[0, σ^α], [−σ^α, 0]].
    pub fn gamma(j: usize) -> Self {
        let mut m = Self::zero();
        match j {
            0 => return Self::diagonal([ONE, ONE, -ONE, -ONE]),
            1 => {
                let s = [[ZERO, ONE], [ONE, ZERO]];
                m.set_offdiag_blocks(s);
            }
            2 => {
                let s = [[ZERO, -I], [I, ZERO]];
                m.set_offdiag_blocks(s);
            }
            3 => {
                let s = [[ONE, ZERO], [ZERO, -ONE]];
                m.set_offdiag_blocks(s);
            }
            _ => panic!("gamma index {j} out of range"),
        }
        m
    }

    fn set_offdiag_blocks(&mut self, sigma: [[Complex64; 2]; 2]) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j + 2] = sigma[i][j];
                self.0[i + 2][j] = -sigma[i][j];
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|row| row.map(|z| z * s)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        std::array::from_fn(|i| (0..4).map(|j| self.0[i][j] * v[j]).sum())
    }

    pub fn column(&self, j: usize) -> Spinor {
        std::array::from_fn(|i| self.0[i][j])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Row-major flat copy.
    pub fn to_flat(&self) -> [Complex64; 16] {
        std::array::from_fn(|k| self.0[k / 4][k % 4])
    }
}

impl Index<(usize, usize)> for SpinorMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for SpinorMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Mul for SpinorMatrix {
    type Output = SpinorMatrix;
    fn mul(self, o: SpinorMatrix) -> SpinorMatrix {
        let mut m = SpinorMatrix::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * o.0[k][j];
                }
            }
        }
        m
    }
}

impl Add for SpinorMatrix {
    type Output = SpinorMatrix;
    fn add(self, o: SpinorMatrix) -> SpinorMatrix {
        SpinorMatrix(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + o.0[i][j])))
    }
}

impl AddAssign for SpinorMatrix {
    fn add_assign(&mut self, o: SpinorMatrix) {
        *self = *self + o;
    }
}

impl Sub for SpinorMatrix {
    type Output = SpinorMatrix;
    fn sub(self, o: SpinorMatrix) -> SpinorMatrix {
        SpinorMatrix(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - o.0[i][j])))
    }
}

impl Neg for SpinorMatrix {
    type Output = SpinorMatrix;
    fn neg(self) -> SpinorMatrix {
        self.scale(-ONE)
    }
}

impl Mul<Complex64> for SpinorMatrix {
    type Output = SpinorMatrix;
    fn mul(self, s: Complex64) -> SpinorMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for SpinorMatrix {
    type Output = SpinorMatrix;
    fn mul(self, s: f64) -> SpinorMatrix {
        self.scale(Complex64::new(s, 0.0))
    }
}

/// `v̸ = v_j γ^j = v⁰γ⁰ − v¹γ¹ − v²γ² − v³γ³`.
pub fn slash(v: ComplexFourVector) -> SpinorMatrix {
    let c = v.0;
    // Written out for the Dirac representation to keep the hot path tight.
    let (v0, v1, v2, v3) = (c[0], c[1], c[2], c[3]);
    // Upper-right block: −v⃗·σ; lower-left block: +v⃗·σ.
    let s00 = v3;
    let s01 = v1 - I * v2;
    let s10 = v1 + I * v2;
    let s11 = -v3;
    SpinorMatrix([
        [v0, ZERO, -s00, -s01],
        [ZERO, v0, -s10, -s11],
        [s00, s01, -v0, ZERO],
        [s10, s11, ZERO, -v0],
    ])
}

/// Spin adjoint `M* = γ⁰ M† γ⁰`.
pub fn spin_adjoint(m: &SpinorMatrix) -> SpinorMatrix {
    let mut a = m.adjoint();
    for i in 0..4 {
        for j in 0..4 {
            let s = (SIGNATURE[i] * SIGNATURE[j]) as f64;
            a.0[i][j] *= s;
        }
    }
    a
}

/// Spin scalar product `≺a|b≻ = a† γ⁰ b`.
pub fn spin_product(a: &Spinor, b: &Spinor) -> Complex64 {
    (0..4).map(|i| a[i].conj() * b[i] * SIGNATURE[i] as f64).sum()
}

/// Euclidean norm of a spinor.
pub fn spinor_norm(a: &Spinor) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, from the Hermitian eigenproblem of `M†M`.
pub fn spectral_norm(m: &SpinorMatrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    // Normalize first to keep M†M away from under/overflow.
    let n = m.scale(Complex64::new(1.0 / scale, 0.0));
    let g = n.adjoint() * n;
    let (vals, _) = hermitian_eigen(4, &g.to_flat());
    vals[3].max(0.0).sqrt() * scale
}

/// Canonical basis vector `𝔢_μ` (zero-based μ).
pub fn basis_spinor(mu: usize) -> Spinor {
    let mut e = [ZERO; 4];
    e[mu] = ONE;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_relations() {
        for i in 0..4 {
            for j in 0..4 {
                let gi = SpinorMatrix::gamma(i);
                let gj = SpinorMatrix::gamma(j);
                let anti = gi * gj + gj * gi;
                let eta = if i == j { 2.0 * METRIC[i] } else { 0.0 };
                let expect = SpinorMatrix::identity() * eta;
                assert!((anti - expect).max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn slash_matches_gamma_contraction() {
        let v = ComplexFourVector([
            Complex64::new(0.3, 0.1),
            Complex64::new(-1.2, 0.0),
            Complex64::new(0.7, -0.4),
            Complex64::new(2.0, 0.5),
        ]);
        let mut expect = SpinorMatrix::zero();
        for j in 0..4 {
            expect += SpinorMatrix::gamma(j) * (v.0[j] * METRIC[j]);
        }
        assert!((slash(v) - expect).max_abs() < 1e-15);
        let e3 = ComplexFourVector::from_real(FourVector::axis(3));
        assert!((slash(e3) + SpinorMatrix::gamma(3)).max_abs() == 0.0);
    }

    #[test]
    fn examples() {
        let v = complexify(FourVector::new(2.0, 1.0, -1.0, 0.0), 0.5).unwrap();
        assert_eq!(v.0[0], Complex64::new(2.0, 0.5));
        assert_eq!(v.0[2], Complex64::new(-1.0, 0.0));
        assert!(complexify(FourVector::ZERO, 0.0).is_err());
        let z = neg_minkowski_square(complexify(FourVector::new(1.0, 0.0, 0.0, 0.0), 0.1).unwrap())
            .unwrap()
            .value();
        assert!((z - Complex64::new(-0.99, -0.2)).norm() < 1e-15);
        let z = neg_minkowski_square(complexify(FourVector::new(0.0, 2.0, 0.0, 0.0), 0.1).unwrap())
            .unwrap()
            .value();
        assert!((z - Complex64::new(4.01, 0.0)).norm() < 1e-14);
        assert_eq!(spectral_norm(&SpinorMatrix::identity()), 1.0);
        let d = SpinorMatrix::diagonal([
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
            ZERO,
            ZERO,
        ]);
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-15);
        assert!((spectral_norm(&SpinorMatrix::gamma(0)) - 1.0).abs() < 1e-15);
        let g0 = SpinorMatrix::gamma(0);
        assert_eq!(spin_adjoint(&g0), g0);
    }
}
