//! Small dense linear-algebra kernels used across the crate: a blocked
//! Cholesky log-determinant, a cyclic Jacobi symmetric eigendecomposition,
//! and minimum-norm least squares built on top of it. Matrices here stay
//! small enough (a few hundred to ~1000 rows) that these routines are
//! perfectly adequate and keep the crate free of a LAPACK linkage.

use ndarray::{s, Array1, Array2};

const CHOL_BLOCK: usize = 64;

/// Sum of log-diagonal of the Cholesky factor of a symmetric positive
/// definite matrix, i.e. `logdet(A) / 2`. Returns `None` when the matrix is
/// not numerically positive definite. Right-looking blocked algorithm; the
/// trailing update is a matrix product so the bulk of the work runs at gemm
/// speed.
pub fn cholesky_half_logdet(a: &Array2<f64>) -> Option<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = a.clone();
    let mut acc = 0.0;
    let mut k = 0;
    while k < n {
        let nb = CHOL_BLOCK.min(n - k);
        // unblocked factorization of the panel (diagonal block + rows below)
        for j in k..k + nb {
            let mut d = l[[j, j]];
            for t in k..j {
                d -= l[[j, t]] * l[[j, t]];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let dj = d.sqrt();
            l[[j, j]] = dj;
            acc += dj.ln();
            for i in j + 1..n {
                let mut s = l[[i, j]];
                for t in k..j {
                    s -= l[[i, t]] * l[[j, t]];
                }
                l[[i, j]] = s / dj;
            }
        }
        // trailing update: A22 -= L21 L21^T
        if k + nb < n {
            let l21 = l.slice(s![k + nb.., k..k + nb]).to_owned();
            let update = l21.dot(&l21.t());
            let mut trailing = l.slice_mut(s![k + nb.., k + nb..]);
            trailing -= &update;
        }
        k += nb;
    }
    Some(acc)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and
/// eigenvectors as the columns of the second matrix.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());
    let vals = Array1::from_iter(idx.iter().map(|&i| m[[i, i]]));
    let mut vecs = Array2::zeros((n, n));
    for (col, &i) in idx.iter().enumerate() {
        for row in 0..n {
            vecs[[row, col]] = v[[row, i]];
        }
    }
    (vals, vecs)
}

/// Minimum-norm least-squares solution of `min_beta ||y - P^T beta||` where
/// the rows of `predictors` are the regressor vectors. Falls back to the
/// pseudo-inverse when the Gram matrix is rank deficient, which makes the
/// n < p case well defined.
pub fn min_norm_lstsq(predictors: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let gram = predictors.dot(&predictors.t());
    let rhs = predictors.dot(y);
    let (vals, vecs) = symmetric_eigen(&gram);
    let lmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let t = predictors.nrows();
    let mut beta = Array1::zeros(t);
    if lmax <= 0.0 {
        return beta;
    }
    let cutoff = lmax * 1e-12;
    for k in 0..t {
        let lam = vals[k];
        if lam > cutoff {
            let coeff = vecs.column(k).dot(&rhs) / lam;
            beta.scaled_add(coeff, &vecs.column(k));
        }
    }
    beta
}
