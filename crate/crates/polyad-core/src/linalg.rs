//! Small dense decompositions: one-sided Jacobi SVD, Moore-Penrose
//! pseudo-inverse, cyclic Jacobi symmetric eigensolver, Cholesky, and the
//! generalized symmetric-definite eigenproblem used by CSP.
//!
//! Jacobi methods are chosen over faster bidiagonalization schemes because
//! the matrices here are small (ranks and channel counts, not signal
//! lengths), the implementations are branch-light and allocation-free in the
//! inner loops, and they deliver high relative accuracy on the
//! near-rank-deficient inputs the square-mapping solver produces.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tensor::Matrix;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Errors from the dense decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// Cholesky pivot was not strictly positive.
    NotPositiveDefinite,
    /// An iteration failed to converge within its sweep budget.
    ConvergenceFailed,
}

impl core::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            LinalgError::ConvergenceFailed => write!(f, "iteration did not converge"),
        }
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T`.
///
/// `u` is `m x min(m,n)`, `v` is `n x min(m,n)`, singular values are sorted
/// in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD.
///
/// Columns of the working copy are rotated pairwise until mutually
/// orthogonal; column norms become the singular values. Zero singular values
/// (rank deficiency) are kept as explicit zeros with zero left vectors.
pub fn svd(a: &Matrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let m = a.rows();
    let n = a.cols();

    // Column-major working buffers for contiguous column access.
    let mut w = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            w[j * m + i] = a.get(i, j);
        }
    }
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    let tol = 1e-15;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let wp = w[p * m + i];
                    let wq = w[q * m + i];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma * gamma <= tol * tol * alpha * beta {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let wp = w[p * m + i];
                    let wq = w[q * m + i];
                    w[p * m + i] = c * wp - s * wq;
                    w[q * m + i] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[p * n + i];
                    let vq = v[q * n + i];
                    v[p * n + i] = c * vp - s * vq;
                    v[q * n + i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| math::norm(&w[j * m..(j + 1) * m])).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("norms are finite"));

    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular_values.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                u.set(i, dst, w[src * m + i] / sigma);
            }
        }
        for i in 0..n {
            v_sorted.set(i, dst, v[src * n + i]);
        }
    }
    Svd {
        u,
        singular_values,
        v: v_sorted,
    }
}

/// Moore-Penrose pseudo-inverse via SVD with the standard rank-revealing
/// cutoff `max(rows, cols) * eps * sigma_max`. Rank deficiency (including the
/// zero matrix) is handled by dropping the cut singular directions.
pub fn pseudo_inverse(a: &Matrix) -> Matrix {
    let decomposition = svd(a);
    let sigma_max = decomposition.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = a.rows().max(a.cols()) as f64 * f64::EPSILON * sigma_max;
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for (k, &sigma) in decomposition.singular_values.iter().enumerate() {
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        let inv = 1.0 / sigma;
        for i in 0..a.cols() {
            let vi = decomposition.v.get(i, k) * inv;
            if vi == 0.0 {
                continue;
            }
            let row = out.row_mut(i);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += vi * decomposition.u.get(j, k);
            }
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with eigenvectors as the matching
/// columns (orthonormal).
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    assert_eq!(a.rows(), a.cols(), "symmetric_eigen needs a square matrix");
    let n = a.rows();
    let mut work = a.clone();
    let mut vectors = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], vectors));
    }

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += work.get(p, q) * work.get(p, q);
            }
        }
        if math::sqrt(2.0 * off) <= 1e-14 * scale {
            let mut order: Vec<usize> = (0..n).collect();
            let diag: Vec<f64> = (0..n).map(|i| work.get(i, i)).collect();
            order.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).expect("finite eigenvalues"));
            let values = order.iter().map(|&i| diag[i]).collect();
            let mut sorted = Matrix::zeros(n, n);
            for (dst, &src) in order.iter().enumerate() {
                for i in 0..n {
                    sorted.set(i, dst, vectors.get(i, src));
                }
            }
            return Ok((values, sorted));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = work.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = work.get(p, p);
                let aqq = work.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = work.get(i, p);
                        let aiq = work.get(i, q);
                        let new_ip = c * aip - s * aiq;
                        let new_iq = s * aip + c * aiq;
                        work.set(i, p, new_ip);
                        work.set(p, i, new_ip);
                        work.set(i, q, new_iq);
                        work.set(q, i, new_iq);
                    }
                }
                let new_pp = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                let new_qq = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                work.set(p, p, new_pp);
                work.set(q, q, new_qq);
                work.set(p, q, 0.0);
                work.set(q, p, 0.0);
                for i in 0..n {
                    let vip = vectors.get(i, p);
                    let viq = vectors.get(i, q);
                    vectors.set(i, p, c * vip - s * viq);
                    vectors.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    Err(LinalgError::ConvergenceFailed)
}

/// Cholesky factor `L` (lower triangular) of a symmetric positive definite
/// matrix, `A = L L^T`.
pub fn cholesky(a: &Matrix) -> Result<Matrix, LinalgError> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                l.set(j, j, math::sqrt(sum));
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for j in 0..i {
            sum -= l.get(i, j) * x[j];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}

/// Solve `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = b[i];
        for j in (i + 1)..n {
            sum -= l.get(j, i) * x[j];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let l = cholesky(a)?;
    Ok(solve_lower_transpose(&l, &solve_lower(&l, b)))
}

/// Generalized symmetric-definite eigenproblem `A w = lambda B w`.
///
/// `B` must be positive definite. Eigenvalues come back in descending order;
/// the eigenvector columns are `B`-orthonormal (`W^T B W = I`), which is the
/// normalization spatial-filter whitening relies on.
pub fn generalized_symmetric_eigen(
    a: &Matrix,
    b: &Matrix,
) -> Result<(Vec<f64>, Matrix), LinalgError> {
    assert_eq!(a.rows(), a.cols(), "generalized eigen needs square matrices");
    assert_eq!(a.rows(), b.rows(), "operand sizes disagree");
    let n = a.rows();
    let l = cholesky(b)?;

    // P = L^-1 A L^-T, assembled column by column through triangular solves.
    let mut p = Matrix::zeros(n, n);
    // First Y = L^-1 A  (solve per column of A).
    let mut y = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower(&l, &a.column(j));
        for i in 0..n {
            y.set(i, j, col[i]);
        }
    }
    // Then P^T = L^-1 Y^T, i.e. solve per row of Y.
    for i in 0..n {
        let col = solve_lower(&l, y.row(i));
        for j in 0..n {
            p.set(i, j, col[j]);
        }
    }
    // Symmetrize against rounding before the Jacobi sweep.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (p.get(i, j) + p.get(j, i));
            p.set(i, j, avg);
            p.set(j, i, avg);
        }
    }

    let (values, inner) = symmetric_eigen(&p)?;
    // Map back: w = L^-T v. No re-normalization -- that would break
    // B-orthonormality.
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower_transpose(&l, &inner.column(j));
        for i in 0..n {
            w.set(i, j, col[i]);
        }
    }
    Ok((values, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_open() * 2.0 - 1.0)
    }

    fn reconstruct_svd(s: &Svd) -> Matrix {
        let mut scaled = s.u.clone();
        for i in 0..scaled.rows() {
            for (j, &sigma) in s.singular_values.iter().enumerate() {
                scaled.set(i, j, scaled.get(i, j) * sigma);
            }
        }
        scaled.matmul_transpose_b(&s.v)
    }

    /// Gauss-Jordan inverse, used only as an independent oracle.
    fn invert(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, a.get(i, j));
            }
            aug.set(i, n + i, 1.0);
        }
        for col in 0..n {
            let mut pivot = col;
            for r in col..n {
                if aug.get(r, col).abs() > aug.get(pivot, col).abs() {
                    pivot = r;
                }
            }
            let pivot_val = aug.get(pivot, col);
            assert!(pivot_val.abs() > 1e-12, "oracle matrix is singular");
            for j in 0..2 * n {
                let tmp = aug.get(col, j);
                aug.set(col, j, aug.get(pivot, j) / pivot_val);
                if pivot != col {
                    aug.set(pivot, j, tmp);
                }
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug.get(r, col);
                for j in 0..2 * n {
                    aug.set(r, j, aug.get(r, j) - factor * aug.get(col, j));
                }
            }
        }
        Matrix::from_fn(n, n, |i, j| aug.get(i, n + j))
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = SeededRng::new(21);
        for &(m, n) in &[(4usize, 4usize), (6, 3), (3, 6)] {
            let a = random_matrix(&mut rng, m, n);
            let s = svd(&a);
            let back = reconstruct_svd(&s);
            assert!(a.sub(&back).frobenius_norm() < 1e-12 * a.frobenius_norm().max(1.0));
            for w in s.singular_values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn pseudo_inverse_of_invertible_matrix_is_inverse() {
        let a = Matrix::new(2, 2, vec![3.0, 1.0, 2.0, 4.0]);
        let pinv = pseudo_inverse(&a);
        let expected = invert(&a);
        assert!(pinv.sub(&expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_matches_normal_equation_oracle_for_tall_matrices() {
        let mut rng = SeededRng::new(22);
        let m = random_matrix(&mut rng, 6, 3);
        let pinv = pseudo_inverse(&m);
        // Full column rank: pinv = (M^T M)^-1 M^T.
        let oracle = invert(&m.gram()).matmul(&m.transpose());
        assert!(pinv.sub(&oracle).frobenius_norm() < 1e-10 * oracle.frobenius_norm());
    }

    #[test]
    fn pseudo_inverse_of_zero_matrix_is_transposed_zero() {
        let z = Matrix::zeros(3, 5);
        let pinv = pseudo_inverse(&z);
        assert_eq!((pinv.rows(), pinv.cols()), (5, 3));
        assert!(pinv.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_identities() {
        let mut rng = SeededRng::new(23);
        // Includes an exactly rank-deficient case: two equal columns.
        let mut cases = vec![
            random_matrix(&mut rng, 5, 3),
            random_matrix(&mut rng, 3, 5),
            random_matrix(&mut rng, 4, 4),
        ];
        let base = random_matrix(&mut rng, 5, 1);
        let deficient = Matrix::from_fn(5, 3, |i, j| base.get(i, 0) * (j as f64 + 1.0));
        cases.push(deficient);

        for a in &cases {
            let p = pseudo_inverse(a);
            let scale = a.frobenius_norm().max(1.0);
            let apa = a.matmul(&p).matmul(a);
            assert!(apa.sub(a).frobenius_norm() <= 1e-10 * scale);
            let pap = p.matmul(a).matmul(&p);
            assert!(pap.sub(&p).frobenius_norm() <= 1e-10 * p.frobenius_norm().max(1.0));
            let ap = a.matmul(&p);
            assert!(ap.sub(&ap.transpose()).frobenius_norm() <= 1e-10 * scale);
            let pa = p.matmul(a);
            assert!(pa.sub(&pa.transpose()).frobenius_norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn symmetric_eigen_diagonal_case() {
        let a = Matrix::new(3, 3, vec![5.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        let (values, vectors) = symmetric_eigen(&a).unwrap();
        assert!((values[0] - 5.0).abs() < 1e-12);
        assert!((values[1] - 3.0).abs() < 1e-12);
        assert!((values[2] - 1.0).abs() < 1e-12);
        // Orthonormal columns.
        let gram = vectors.gram();
        assert!(gram.sub(&Matrix::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn symmetric_eigen_2x2_analytic() {
        let a = Matrix::new(2, 2, vec![3.0, 1.0, 1.0, 3.0]);
        let (values, vectors) = symmetric_eigen(&a).unwrap();
        assert!((values[0] - 4.0).abs() < 1e-12);
        assert!((values[1] - 2.0).abs() < 1e-12);
        // A v = lambda v for the leading pair.
        let v0 = vectors.column(0);
        for i in 0..2 {
            let av = a.get(i, 0) * v0[0] + a.get(i, 1) * v0[1];
            assert!((av - values[0] * v0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_round_trip_and_failure() {
        let a = Matrix::new(2, 2, vec![4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&a).unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&a).frobenius_norm() < 1e-12);

        let not_spd = Matrix::new(2, 2, vec![-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(cholesky(&not_spd), Err(LinalgError::NotPositiveDefinite));
    }

    #[test]
    fn solve_spd_matches_direct_substitution() {
        let a = Matrix::new(2, 2, vec![4.0, 2.0, 2.0, 3.0]);
        let x = solve_spd(&a, &[8.0, 7.0]).unwrap();
        assert!((a.get(0, 0) * x[0] + a.get(0, 1) * x[1] - 8.0).abs() < 1e-12);
        assert!((a.get(1, 0) * x[0] + a.get(1, 1) * x[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_eigen_reduces_to_standard_for_identity_b() {
        let a = Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 1.0]);
        let (values, _) = generalized_symmetric_eigen(&a, &Matrix::identity(2)).unwrap();
        assert!((values[0] - 2.0).abs() < 1e-10);
        assert!((values[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn generalized_eigen_vectors_are_b_orthonormal() {
        let mut rng = SeededRng::new(24);
        let g = random_matrix(&mut rng, 4, 4);
        let mut b = g.gram();
        for i in 0..4 {
            b.set(i, i, b.get(i, i) + 1.0);
        }
        let h = random_matrix(&mut rng, 4, 4);
        let a = h.gram();
        let (_, w) = generalized_symmetric_eigen(&a, &b).unwrap();
        let wtbw = w.transpose().matmul(&b).matmul(&w);
        assert!(wtbw.sub(&Matrix::identity(4)).frobenius_norm() < 1e-10);
    }
}
