//! Finite-dimensional model of causal fermion systems: operators of bounded
//! signature, ordered spectra, the generalized inverse, spin frames, the
//! abstract kernel / closed chain / Lagrangian, admissibility inequalities,
//! local representations and eigenvalue enumerations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::CausalClass;
use crate::error::{invalid, require_positive, CfsError, Result};
use crate::linalg::{complex_eigenvalues, hermitian_eigen_dmatrix, hungarian, sort_eigenvalues};

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Operator norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Self-adjoint operator with at most `n` positive and at most `n` negative
/// eigenvalues, with its eigendecomposition cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CfsOperator {
    matrix: CMatrix,
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    norm: f64,
    tol: f64,
}

/// Eigenvalues ordered as `λ₁ ≤ … ≤ λ_n ≤ 0 ≤ λ_{n+1} ≤ … ≤ λ_{2n}`: the
/// negative eigenvalues by non-increasing modulus followed by the positive
/// ones by non-decreasing value, each half padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpectrum {
    pub values: Vec<f64>,
}

/// Pseudo-orthonormal basis of a spin space: `≺e_i|e_j≻_x = s_i δ_ij`,
/// first `n` vectors in `S_x⁻` (`s = +1`), last `n` in `S_x⁺` (`s = −1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFrame {
    /// Columns `e_j`.
    pub vectors: CMatrix,
    /// Columns `ê_j = √|x|·e_j` (orthonormal in the ambient space).
    pub hilbert: CMatrix,
    pub signs: Vec<i8>,
}

impl CfsOperator {
    /// Validate a Hermitian matrix as an element of the operator set with
    /// spin dimension `n`. Eigenvalues with modulus below
    /// `1e-12·(1 + ‖matrix‖)` count as zero.
    pub fn new(matrix: CMatrix, n: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("matrix", "must be square and non-empty"));
        }
        if n == 0 {
            return Err(invalid("n", "spin dimension must be at least 1"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CfsError::Domain("matrix has non-finite entries".into()));
        }
        let scale = max_abs(&matrix);
        let asym = max_abs(&(&matrix - matrix.adjoint()));
        if asym > 1e-12 * (1.0 + scale) {
            return Err(invalid("matrix", format!("not Hermitian (asymmetry {asym:.3e})")));
        }
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let (eigenvalues, eigenvectors) = hermitian_eigen_dmatrix(&herm);
        let norm = eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = 1e-12 * (1.0 + norm);
        let op = Self {
            matrix: herm,
            n,
            eigenvalues,
            eigenvectors,
            norm,
            tol,
        };
        let (neg, pos) = op.signature();
        if neg > n || pos > n {
            return Err(invalid(
                "matrix",
                format!("signature ({neg}, {pos}) exceeds spin dimension {n}"),
            ));
        }
        Ok(op)
    }

    /// The zero operator on `ℂ^dim`.
    pub fn zero(dim: usize, n: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim), n)
    }

    /// `x = −B†JB` with `J = diag(1_n, −1_n)` for a `2n × D` matrix `B`.
    pub fn from_frame(b: &CMatrix, n: usize) -> Result<Self> {
        if b.nrows() != 2 * n {
            return Err(invalid("b", "must have 2n rows"));
        }
        let mut jb = b.clone();
        for i in 0..n {
            jb.row_mut(i).neg_mut();
        }
        // −B†JB = B†(−J)B.
        Self::new(b.adjoint() * jb, n)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Operator norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }
    /// Zero tolerance used for signature counting.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    /// Orthonormal eigenvectors (columns, matching [`Self::eigenvalues`]).
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `(n₋, n₊)`.
    pub fn signature(&self) -> (usize, usize) {
        let neg = self.eigenvalues.iter().filter(|&&v| v < -self.tol).count();
        let pos = self.eigenvalues.iter().filter(|&&v| v > self.tol).count();
        (neg, pos)
    }

    /// Regular iff the signature is `(n, n)`.
    pub fn is_regular(&self) -> bool {
        self.signature() == (self.n, self.n)
    }

    fn range_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.eigenvalues[k].abs() > self.tol).collect()
    }

    /// Orthogonal projector `π_x` onto the range (spin space `S_x`).
    pub fn range_projector(&self) -> CMatrix {
        let idx = self.range_indices();
        let q = self.eigenvectors.select_columns(&idx);
        &q * q.adjoint()
    }

    pub fn ordered_spectrum(&self) -> OrderedSpectrum {
        let n = self.n;
        let mut values = vec![0.0; 2 * n];
        let negs: Vec<f64> = self.eigenvalues.iter().cloned().filter(|&v| v < -self.tol).collect();
        let mut poss: Vec<f64> = self.eigenvalues.iter().cloned().filter(|&v| v > self.tol).collect();
        // Ascending order already puts the most negative first.
        for (k, v) in negs.iter().take(n).enumerate() {
            values[k] = *v;
        }
        poss.sort_by(|a, b| b.total_cmp(a));
        // λ_k = λ⁺_{2n−k+1} for k > n (1-based).
        for (j, v) in poss.iter().take(n).enumerate() {
            values[2 * n - 1 - j] = *v;
        }
        OrderedSpectrum { values }
    }

    /// Generalized inverse: inverse on the range, zero on its complement.
    pub fn gen_inverse(&self) -> CfsOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for k in self.range_indices() {
            let v = self.eigenvectors.column(k);
            m += &v * v.adjoint() * Complex64::new(1.0 / self.eigenvalues[k], 0.0);
        }
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        CfsOperator::new(m, self.n).expect("generalized inverse preserves the signature")
    }

    /// `≺u|v≻_x = −⟨u|x v⟩`.
    pub fn spin_product(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let xv = &self.matrix * nalgebra::DVector::from_column_slice(v);
        -u.iter().zip(xv.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>()
    }

    /// Pseudo-orthonormal frame built from the eigenbasis.
    pub fn faithful_frame(&self) -> Result<SpinFrame> {
        if !self.is_regular() {
            return Err(invalid("x", "faithful frames require a regular operator"));
        }
        let d = self.dim();
        let n = self.n;
        let neg: Vec<usize> = (0..d).filter(|&k| self.eigenvalues[k] < -self.tol).collect();
        let pos: Vec<usize> = (0..d).filter(|&k| self.eigenvalues[k] > self.tol).collect();
        let order: Vec<usize> = neg.into_iter().chain(pos).collect();
        let mut vectors = CMatrix::zeros(d, 2 * n);
        let mut hilbert = CMatrix::zeros(d, 2 * n);
        let mut signs = Vec::with_capacity(2 * n);
        for (j, &k) in order.iter().enumerate() {
            let lam = self.eigenvalues[k];
            let v = self.eigenvectors.column(k);
            hilbert.set_column(j, &v);
            vectors.set_column(j, &(v * Complex64::new(1.0 / lam.abs().sqrt(), 0.0)));
            signs.push(if lam < 0.0 { 1 } else { -1 });
        }
        Ok(SpinFrame { vectors, hilbert, signs })
    }

    /// Local representation `Ψ: ℂ^D → ℂ^{2n}`, `Ψu = V(π_x u)` with `V`
    /// mapping the faithful frame to the standard basis, so that
    /// `x = −Ψ*Ψ` with `Ψ* = Ψ†S`, `S = diag(signs)`.
    pub fn local_representation(&self) -> Result<LocalRepresentation> {
        let frame = self.faithful_frame()?;
        let n2 = 2 * self.n;
        // Coordinates of π_x u in the frame: c_j = s_j ≺e_j|u≻_x.
        let mut psi = CMatrix::zeros(n2, self.dim());
        for j in 0..n2 {
            let e = frame.vectors.column(j);
            let row = (e.adjoint() * &self.matrix) * Complex64::new(-(frame.signs[j] as f64), 0.0);
            psi.set_row(j, &row);
        }
        let s = CMatrix::from_fn(n2, n2, |i, k| {
            if i == k {
                Complex64::new(frame.signs[i] as f64, 0.0)
            } else {
                C0
            }
        });
        let recon = psi.adjoint() * &s * &psi;
        let residual = op_norm(&(&self.matrix + recon));
        let rank = psi.rank(1e-10 * (1.0 + op_norm(&psi)));
        Ok(LocalRepresentation {
            psi,
            signs: frame.signs,
            residual,
            relative_residual: residual / self.norm.max(f64::MIN_POSITIVE),
            rank,
        })
    }

    /// Radius `r = 1/(6‖g(x)‖)` of a ball of regular points on which the
    /// generalized inverse obeys `‖g(y) − g(x)‖ ≤ 6‖g(x)‖²‖y − x‖`.
    pub fn lipschitz_radius(&self) -> Result<f64> {
        if !self.is_regular() {
            return Err(invalid("x", "the Lipschitz radius is defined at regular points"));
        }
        Ok(1.0 / (6.0 * self.gen_inverse().norm()))
    }
}

/// Result of [`CfsOperator::local_representation`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRepresentation {
    pub psi: CMatrix,
    pub signs: Vec<i8>,
    /// `‖x + Ψ*Ψ‖`.
    pub residual: f64,
    /// `‖x + Ψ*Ψ‖ / ‖x‖`.
    pub relative_residual: f64,
    /// Numerical rank of `Ψ` (surjective iff `2n`).
    pub rank: usize,
}

/// Random regular operator `x = −B†JB` with a `2n × dim` matrix `B` of
/// independent entries uniform in the unit square; returns `(x, B)`.
pub fn random_regular<R: Rng>(dim: usize, n: usize, rng: &mut R) -> Result<(CfsOperator, CMatrix)> {
    if dim < 2 * n {
        return Err(invalid("dim", "must be at least 2n"));
    }
    loop {
        let b = random_matrix(2 * n, dim, rng);
        let x = CfsOperator::from_frame(&b, n)?;
        if x.is_regular() {
            return Ok((x, b));
        }
    }
}

/// Matrix with entries uniform in `[−1,1] + i[−1,1]`.
pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(dim, dim, rng);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `x(ε) = x + ε Σ s_i ⟨e_i,·⟩e_i` on an orthonormal set in `S_x^⊥`
/// (randomly rotated within the kernel using `seed`), with signs filling
/// the signature to `(n, n)`. Regular input is returned unchanged.
pub fn regular_perturbation(x: &CfsOperator, eps: f64, seed: u64) -> Result<CfsOperator> {
    require_positive("epsilon", eps)?;
    if x.is_regular() {
        return Ok(x.clone());
    }
    let (neg, pos) = x.signature();
    let k_neg = x.n - neg;
    let k_pos = x.n - pos;
    let kernel: Vec<usize> = (0..x.dim()).filter(|&k| x.eigenvalues[k].abs() <= x.tol).collect();
    if kernel.len() < k_neg + k_pos {
        return Err(invalid("x", "ambient dimension too small to host a 2n-dimensional range"));
    }
    let basis = x.eigenvectors.select_columns(&kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = random_matrix(kernel.len(), k_neg + k_pos, &mut rng);
    let q = (basis * mix).qr().q();
    let mut m = x.matrix.clone();
    for i in 0..k_neg + k_pos {
        let s = if i < k_neg { -eps } else { eps };
        let e = q.column(i);
        m += &e * e.adjoint() * Complex64::new(s, 0.0);
    }
    CfsOperator::new(m, x.n)
}

/// `(ε, ‖g(x(ε))‖)` along the regular perturbations of a non-regular point.
pub fn discontinuity_witness(x: &CfsOperator, eps_list: &[f64], seed: u64) -> Result<Vec<(f64, f64)>> {
    if x.is_regular() {
        return Err(invalid("x", "the witness family starts at a non-regular point"));
    }
    eps_list
        .iter()
        .map(|&e| Ok((e, regular_perturbation(x, e, seed)?.gen_inverse().norm())))
        .collect()
}

/// Kernel `P(x,y) = π_x·y`.
pub fn spin_kernel(x: &CfsOperator, y: &CfsOperator) -> CMatrix {
    x.range_projector() * y.matrix()
}

/// Closed chain `A_xy = P(x,y)·P(y,x)`.
pub fn spin_chain(x: &CfsOperator, y: &CfsOperator) -> CMatrix {
    spin_kernel(x, y) * spin_kernel(y, x)
}

fn eigs(m: &CMatrix) -> Result<Vec<Complex64>> {
    let mut ev = complex_eigenvalues(m).ok_or_else(|| CfsError::NonConvergence("Schur iteration".into()))?;
    sort_eigenvalues(&mut ev, 1e-10);
    Ok(ev)
}

fn pad_spectrum(mut ev: Vec<Complex64>, n: usize, zero_tol: f64) -> Vec<Complex64> {
    ev.truncate(2 * n);
    for z in ev.iter_mut() {
        if z.norm() <= zero_tol {
            *z = C0;
        }
    }
    ev.resize(2 * n, C0);
    ev
}

/// `λ₁^{xy}, …, λ_{2n}^{xy}`: non-zero eigenvalues of `x·y` by
/// non-increasing modulus, padded with zeros. Eigenvalues below
/// `1e-9·‖x‖‖y‖` count as zero.
pub fn xy_eigenvalues(x: &CfsOperator, y: &CfsOperator) -> Result<Vec<Complex64>> {
    let ev = eigs(&(x.matrix() * y.matrix()))?;
    Ok(pad_spectrum(ev, x.n, 1e-9 * x.norm() * y.norm()))
}

/// Spectrum of the closed chain restricted to `S_x` (padded to `2n`),
/// computed independently of [`xy_eigenvalues`].
pub fn chain_eigenvalues(x: &CfsOperator, y: &CfsOperator) -> Result<Vec<Complex64>> {
    let q = x.eigenvectors.select_columns(&x.range_indices());
    if q.ncols() == 0 {
        return Ok(vec![C0; 2 * x.n]);
    }
    let a = q.adjoint() * spin_chain(x, y) * &q;
    Ok(pad_spectrum(eigs(&a)?, x.n, 1e-9 * x.norm() * y.norm()))
}

/// `L = (1/4n) Σ_{i,j} (|λ_i| − |λ_j|)²` over a spectrum padded to `2n`.
pub fn lagrangian_from_eigenvalues(ev: &[Complex64], n: usize) -> f64 {
    let mut abs: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
    abs.resize(2 * n, 0.0);
    let mut s = 0.0;
    for a in &abs {
        for b in &abs {
            s += (a - b) * (a - b);
        }
    }
    s / (4.0 * n as f64)
}

/// Abstract Lagrangian `L(x, y)`.
pub fn abstract_lagrangian(x: &CfsOperator, y: &CfsOperator) -> Result<f64> {
    Ok(lagrangian_from_eigenvalues(&xy_eigenvalues(x, y)?, x.n))
}

/// Causal classification of a spectrum: spacelike if all moduli agree,
/// timelike if all eigenvalues are real with unequal moduli, lightlike
/// otherwise. Comparisons use `rel_tol·max|λ|`.
pub fn classify_eigenvalues(ev: &[Complex64], rel_tol: f64) -> CausalClass {
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = rel_tol * scale;
    let equal = ev.iter().all(|z| (z.norm() - scale).abs() <= tol);
    if equal {
        CausalClass::Spacelike
    } else if ev.iter().all(|z| z.im.abs() <= tol) {
        CausalClass::Timelike
    } else {
        CausalClass::Lightlike
    }
}

/// Causal relation of two operators (relative tolerance `1e-10`).
pub fn causal_classify_abstract(x: &CfsOperator, y: &CfsOperator) -> Result<CausalClass> {
    Ok(classify_eigenvalues(&xy_eigenvalues(x, y)?, 1e-10))
}

/// Both sides of the admissibility inequality chains
/// i) `|λ_i^{xy}| ≤ ‖A_xy‖ ≤ ‖P(x,y)‖‖P(y,x)‖` and
/// ii) `‖P(y,x)‖ ≤ ‖x‖‖g(y)‖‖P(x,y)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityBounds {
    pub max_abs_lambda: f64,
    pub chain_norm: f64,
    /// `‖P(x,y)‖·‖P(y,x)‖`.
    pub bound_i: f64,
    pub kernel_yx_norm: f64,
    /// `‖x‖·‖g(y)‖·‖P(x,y)‖`.
    pub bound_ii: f64,
}

/// Evaluate and check both admissibility chains (violations beyond
/// `1e-10` relative are reported as invariant failures).
pub fn admissibility_bounds(x: &CfsOperator, y: &CfsOperator) -> Result<AdmissibilityBounds> {
    let pxy = op_norm(&spin_kernel(x, y));
    let pyx = op_norm(&spin_kernel(y, x));
    let chain_norm = op_norm(&spin_chain(x, y));
    let max_abs_lambda = xy_eigenvalues(x, y)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let b = AdmissibilityBounds {
        max_abs_lambda,
        chain_norm,
        bound_i: pxy * pyx,
        kernel_yx_norm: pyx,
        bound_ii: x.norm() * y.gen_inverse().norm() * pxy,
    };
    let le = |a: f64, c: f64| a <= c + 1e-10 * c.max(a) + f64::MIN_POSITIVE;
    if !(le(b.max_abs_lambda, b.chain_norm) && le(b.chain_norm, b.bound_i) && le(b.kernel_yx_norm, b.bound_ii)) {
        return Err(CfsError::Invariant(format!("admissibility chain violated: {b:?}")));
    }
    Ok(b)
}

/// `sup_{u ∈ 𝕊 ∩ M^⊥} ⟨Au|u⟩` for Hermitian `A` and the span `M` of the
/// columns of `m_basis` (the largest eigenvalue of the compression of `A`
/// to `M^⊥`).
pub fn minmax_sup(a: &CMatrix, m_basis: &CMatrix) -> f64 {
    let d = a.nrows();
    let comp = if m_basis.ncols() == 0 {
        CMatrix::identity(d, d)
    } else {
        let q = m_basis.clone().qr().q();
        let proj = CMatrix::identity(d, d) - &q * q.adjoint();
        let (vals, vecs) = hermitian_eigen_dmatrix(&proj);
        let keep: Vec<usize> = (0..d).filter(|&k| vals[k] > 0.5).collect();
        vecs.select_columns(&keep)
    };
    let c = comp.adjoint() * a * &comp;
    let (vals, _) = hermitian_eigen_dmatrix(&c);
    vals.last().cloned().unwrap_or(0.0)
}

/// `λ⁺_k(A)`: k-th largest positive eigenvalue (1-based), zero if absent.
pub fn lambda_plus(a: &CMatrix, k: usize) -> f64 {
    let (vals, _) = hermitian_eigen_dmatrix(a);
    let mut pos: Vec<f64> = vals.into_iter().filter(|&v| v > 0.0).collect();
    pos.sort_by(|p, q| q.total_cmp(p));
    pos.get(k.saturating_sub(1)).cloned().unwrap_or(0.0)
}

/// Enumerations of the eigenvalues of `T_m` matched to those of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationTable {
    pub target: Vec<Complex64>,
    /// `rows[m][j]` is the eigenvalue of `T_m` matched to `target[j]`.
    pub rows: Vec<Vec<Complex64>>,
    /// `max_j |rows[m][j] − target[j]|`.
    pub max_deviation: Vec<f64>,
}

/// Match eigenvalues of each `T_m` to those of `T` by a minimum-cost
/// assignment on `|ν_i(T_m) − ν_j(T)|`.
pub fn enumeration_match(seq: &[CMatrix], target: &CMatrix) -> Result<EnumerationTable> {
    let t = eigs(target)?;
    let mut rows = Vec::with_capacity(seq.len());
    let mut max_deviation = Vec::with_capacity(seq.len());
    for m in seq {
        if m.shape() != target.shape() {
            return Err(invalid("sequence", "all matrices must share the target dimension"));
        }
        let ev = eigs(m)?;
        let cost: Vec<Vec<f64>> = t.iter().map(|a| ev.iter().map(|b| (a - b).norm()).collect()).collect();
        let assign = hungarian(&cost);
        let row: Vec<Complex64> = assign.iter().map(|&i| ev[i]).collect();
        max_deviation.push(row.iter().zip(&t).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        rows.push(row);
    }
    Ok(EnumerationTable {
        target: t,
        rows,
        max_deviation,
    })
}

/// `e^{iλH} x e^{−iλH}`: a one-parameter unitary group acting on `x`.
pub fn unitary_flow(x: &CfsOperator, h: &CMatrix, lambda: f64) -> Result<CfsOperator> {
    let asym = max_abs(&(h - h.adjoint()));
    if asym > 1e-12 * (1.0 + max_abs(h)) {
        return Err(invalid("generator", "must be Hermitian"));
    }
    let (vals, vecs) = hermitian_eigen_dmatrix(h);
    let d = CMatrix::from_fn(vals.len(), vals.len(), |i, j| {
        if i == j {
            Complex64::from_polar(1.0, lambda * vals[i])
        } else {
            C0
        }
    });
    let u = &vecs * d * vecs.adjoint();
    let m = &u * x.matrix() * u.adjoint();
    CfsOperator::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0), x.n)
}

/// `x(λ) = −(B + λδB)†J(B + λδB)`: a variation of the spanning vectors.
pub fn basis_variation(b: &CMatrix, db: &CMatrix, lambda: f64, n: usize) -> Result<CfsOperator> {
    if b.shape() != db.shape() {
        return Err(invalid("db", "must match the shape of b"));
    }
    CfsOperator::from_frame(&(b + db * Complex64::new(lambda, 0.0)), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn signature_examples() {
        assert!(CfsOperator::new(diag(&[1.0, -1.0, 0.0, 0.0]), 1).is_ok());
        assert!(CfsOperator::new(diag(&[1.0, 2.0, -1.0, 0.0]), 1).is_err());
        assert!(CfsOperator::zero(4, 3).is_ok());
        let x = CfsOperator::new(diag(&[1.0, 0.0]), 1).unwrap();
        assert_eq!(x.signature(), (0, 1));
        assert!(!x.is_regular());
    }

    #[test]
    fn ordered_spectrum_example() {
        let x = CfsOperator::new(diag(&[3.0, -1.0]), 1).unwrap();
        assert_eq!(x.ordered_spectrum().values, vec![-1.0, 3.0]);
        let x = CfsOperator::new(diag(&[3.0, 0.5, -1.0, -4.0, 0.0]), 2).unwrap();
        assert_eq!(x.ordered_spectrum().values, vec![-4.0, -1.0, 0.5, 3.0]);
    }

    #[test]
    fn gen_inverse_example() {
        let x = CfsOperator::new(diag(&[2.0, -0.5, 0.0, 0.0]), 1).unwrap();
        let g = x.gen_inverse();
        assert!(max_abs(&(g.matrix() - diag(&[0.5, -2.0, 0.0, 0.0]))) < 1e-15);
        assert_eq!(CfsOperator::zero(3, 1).unwrap().gen_inverse().norm(), 0.0);
    }

    #[test]
    fn lagrangian_examples() {
        let two = Complex64::new(2.0, 0.0);
        assert_eq!(lagrangian_from_eigenvalues(&[two, two], 1), 0.0);
        assert_eq!(lagrangian_from_eigenvalues(&[two, C0], 1), 2.0);
        assert_eq!(classify_eigenvalues(&[two, -two], 1e-12), CausalClass::Spacelike);
        assert_eq!(classify_eigenvalues(&[two, Complex64::new(1.0, 0.0)], 1e-12), CausalClass::Timelike);
        let ev = [
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert_eq!(classify_eigenvalues(&ev, 1e-12), CausalClass::Lightlike);
    }

    #[test]
    fn perturbation_of_zero() {
        let x = CfsOperator::zero(4, 1).unwrap();
        let p = regular_perturbation(&x, 0.5, 3).unwrap();
        let ev = p.eigenvalues();
        assert!((ev[0] + 0.5).abs() < 1e-14 && (ev[3] - 0.5).abs() < 1e-14);
        assert!(ev[1].abs() < 1e-14 && ev[2].abs() < 1e-14);
        assert!(p.is_regular());
    }
}
