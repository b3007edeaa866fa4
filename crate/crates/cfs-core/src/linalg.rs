//! Small dense linear-algebra kernels shared by the modules: a cyclic
//! Jacobi eigensolver for Hermitian matrices, a Hungarian assignment solver
//! and a generic complex eigenvalue routine (nalgebra Schur form).

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Eigen-decomposition of a Hermitian matrix stored row-major (`n*n`
/// entries). Returns eigenvalues in ascending order and the matching
/// eigenvectors as columns of a row-major `n*n` array.
pub fn hermitian_eigen(n: usize, a: &[Complex64]) -> (Vec<f64>, Vec<Complex64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // Symmetrize to remove rounding asymmetry of the caller.
    for i in 0..n {
        m[i * n + i] = Complex64::new(m[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let v = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
            m[i * n + j] = v;
            m[j * n + i] = v.conj();
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let scale: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let abs = apq.norm();
                if abs <= 1e-300 || abs <= 1e-18 * scale {
                    continue;
                }
                let u = apq / abs;
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // R = [[c, s u], [-s conj(u), c]] acting on columns p, q.
                let rpq = u * s;
                let rqp = -u.conj() * s;
                // A <- A R
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * c + akq * rqp;
                    m[k * n + q] = akp * rpq + akq * c;
                }
                // A <- R^H A
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = apk * c + aqk * rqp.conj();
                    m[q * n + k] = apk * rpq.conj() + aqk * c;
                }
                m[p * n + q] = Complex64::new(0.0, 0.0);
                m[q * n + p] = Complex64::new(0.0, 0.0);
                m[p * n + p] = Complex64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = Complex64::new(m[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c + vkq * rqp;
                    v[k * n + q] = vkp * rpq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = v[k * n + old];
        }
    }
    (values, vectors)
}

/// Eigen-decomposition of a Hermitian `DMatrix`.
pub fn hermitian_eigen_dmatrix(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let flat: Vec<Complex64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    let (vals, vecs) = hermitian_eigen(n, &flat);
    (vals, DMatrix::from_row_slice(n, n, &vecs))
}

/// Eigenvalues of a general complex square matrix, via the complex Schur
/// form. Fails only if the QR iteration does not converge.
pub fn complex_eigenvalues(a: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Sort eigenvalues by descending modulus, then descending real part, then
/// descending imaginary part. Comparisons treat values within `rel_tol` of
/// the largest modulus as ties so that conjugate pairs order reproducibly.
pub fn sort_eigenvalues(values: &mut [Complex64], rel_tol: f64) {
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = rel_tol * scale;
    let key = |a: f64, b: f64| {
        if (a - b).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            b.total_cmp(&a)
        }
    };
    values.sort_by(|a, b| {
        key(a.norm(), b.norm())
            .then(key(a.re, b.re))
            .then(key(a.im, b.im))
    });
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm, O(n^3)). Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-based potentials formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Ordinary least squares fit `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (intercept, slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes() {
        let n = 3;
        let c = |re, im| Complex64::new(re, im);
        let a = vec![
            c(2.0, 0.0),
            c(1.0, 1.0),
            c(0.0, -0.5),
            c(1.0, -1.0),
            c(-1.0, 0.0),
            c(0.3, 0.0),
            c(0.0, 0.5),
            c(0.3, 0.0),
            c(0.5, 0.0),
        ];
        let (vals, vecs) = hermitian_eigen(n, &a);
        for k in 0..n {
            for i in 0..n {
                let mut av = c(0.0, 0.0);
                for j in 0..n {
                    av += a[i * n + j] * vecs[j * n + k];
                }
                assert!((av - vecs[i * n + k] * vals[k]).norm() < 1e-13);
            }
        }
        let tr: f64 = vals.iter().sum();
        assert!((tr - 1.5).abs() < 1e-13);
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn schur_eigenvalues() {
        let c = |re, im| Complex64::new(re, im);
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut e = complex_eigenvalues(&a).unwrap();
        sort_eigenvalues(&mut e, 1e-12);
        assert!((e[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((e[1] - c(0.0, -1.0)).norm() < 1e-12);
    }
}
