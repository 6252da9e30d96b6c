//! PSD projection, Lyapunov solves, and Kronecker / vectorization utilities.

use super::dense::{DenseMatrix, LuFactor, SymMatrix};
use super::eig::{eigenvalues, sym_eig};
use super::LinAlgError;

/// Frobenius-nearest projection onto the PSD cone: clamp negative eigenvalues.
pub fn psd_project(s: &SymMatrix) -> Result<SymMatrix, LinAlgError> {
    let e = sym_eig(s)?;
    let n = s.dim();
    // V max(Lambda, 0) V^T
    let mut out = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let lam = e.values[k].max(0.0);
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = e.vectors.get(i, k);
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                let cur = out.get(i, j);
                out.set(i, j, cur + lam * vik * e.vectors.get(j, k));
            }
        }
    }
    Ok(SymMatrix::from_dense(&out))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(s: &SymMatrix) -> Result<f64, LinAlgError> {
    let e = sym_eig(s)?;
    Ok(*e.values.last().unwrap_or(&0.0))
}

/// Stack the columns of `m` into a single vector (column-major `vec`).
pub fn vec_mat(m: &DenseMatrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.rows() * m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            v.push(m.get(i, j));
        }
    }
    v
}

/// Inverse of [`vec_mat`]: rebuild the `rows x cols` matrix.
pub fn unvec_mat(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix, LinAlgError> {
    if v.len() != rows * cols {
        return Err(LinAlgError::InvalidInput(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a.get(i, j);
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Largest real part over the spectrum of a general square matrix.
pub fn max_real_eig(a: &DenseMatrix) -> Result<f64, LinAlgError> {
    let eigs = eigenvalues(a)?;
    Ok(eigs.iter().map(|&(re, _)| re).fold(f64::NEG_INFINITY, f64::max))
}

/// Solve the continuous Lyapunov equation `A W + W A^T + Q = 0` for symmetric
/// `W`, by Kronecker linearization `(I (x) A + A (x) I) vec(W) = -vec(Q)`.
///
/// Requires `A` Hurwitz; a non-Hurwitz input yields [`LinAlgError::NotHurwitz`]
/// rather than a numeric failure.
pub fn lyapunov_solve(a_cl: &DenseMatrix, q: &SymMatrix) -> Result<SymMatrix, LinAlgError> {
    if !a_cl.is_square() || a_cl.rows() != q.dim() {
        return Err(LinAlgError::InvalidInput("Lyapunov dimension mismatch".into()));
    }
    let max_re = max_real_eig(a_cl)?;
    if max_re >= -1e-12 {
        return Err(LinAlgError::NotHurwitz { max_real_part: max_re });
    }
    let n = a_cl.rows();
    let eye = DenseMatrix::identity(n);
    let sys = kron(&eye, a_cl).add(&kron(a_cl, &eye));
    let rhs: Vec<f64> = vec_mat(&q.to_dense()).iter().map(|v| -v).collect();
    let lu = LuFactor::new(&sys)?;
    let w_vec = lu.solve(&rhs);
    let w = unvec_mat(&w_vec, n, n)?;
    Ok(SymMatrix::from_dense(&w))
}
