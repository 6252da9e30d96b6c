//! Eigensolvers: cyclic Jacobi for symmetric matrices, Hessenberg reduction
//! plus unshifted QR iteration for general spectra.

use super::dense::{DenseMatrix, SymMatrix};
use super::LinAlgError;

/// Symmetric eigendecomposition `S = V diag(values) V^T`.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues sorted descending.
    pub values: Vec<f64>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub vectors: DenseMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Deterministic row-cyclic sweep order; converges quadratically at the
/// dimensions used here (<= ~100).
pub fn sym_eig(s: &SymMatrix) -> Result<SymEig, LinAlgError> {
    if !s.is_finite() {
        return Err(LinAlgError::InvalidInput("non-finite symmetric matrix".into()));
    }
    let n = s.dim();
    if n == 0 {
        return Ok(SymEig { values: Vec::new(), vectors: DenseMatrix::zeros(0, 0) });
    }
    let mut a = s.to_dense();
    let mut v = DenseMatrix::identity(n);
    let scale = a.max_abs().max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= tol {
            return Ok(sorted_eig(&a, &v, n));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // rotate rows/columns p and q of A
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                // accumulate eigenvectors
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }
    Err(LinAlgError::NumericFailure(format!(
        "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (dim {n})"
    )))
}

fn sorted_eig(a: &DenseMatrix, v: &DenseMatrix, n: usize) -> SymEig {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    SymEig { values, vectors }
}

/// Eigenvalues of a general square matrix as `(re, im)` pairs.
///
/// Hessenberg reduction by Householder reflections followed by unshifted QR
/// iteration with 1x1 / 2x2 deflation; iteration cap `500 * n`.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<(f64, f64)>, LinAlgError> {
    if !a.is_square() {
        return Err(LinAlgError::InvalidInput("eigenvalues require a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(LinAlgError::InvalidInput("non-finite matrix entry".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![(a.get(0, 0), 0.0)]);
    }
    let mut h = hessenberg(a);
    let scale = h.max_abs().max(1e-300);
    let tol = 1e-14 * scale;
    let mut eigs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let max_iter = 500 * n;
    let mut iter = 0usize;

    loop {
        // deflate converged trailing eigenvalues
        loop {
            if hi == 0 {
                eigs.push((h.get(0, 0), 0.0));
                return Ok(eigs);
            }
            let sub = h.get(hi, hi - 1).abs();
            let local = tol.max(1e-15 * (h.get(hi, hi).abs() + h.get(hi - 1, hi - 1).abs()));
            if sub <= local {
                eigs.push((h.get(hi, hi), 0.0));
                hi -= 1;
                continue;
            }
            if hi >= 1 {
                let above = if hi >= 2 { h.get(hi - 1, hi - 2).abs() } else { 0.0 };
                let local2 = tol.max(
                    1e-15 * (h.get(hi - 1, hi - 1).abs() + if hi >= 2 { h.get(hi - 2, hi - 2).abs() } else { 0.0 }),
                );
                if hi == 1 || above <= local2 {
                    // isolated trailing 2x2 block
                    let (e1, e2) = eig_2x2(
                        h.get(hi - 1, hi - 1),
                        h.get(hi - 1, hi),
                        h.get(hi, hi - 1),
                        h.get(hi, hi),
                    );
                    eigs.push(e1);
                    eigs.push(e2);
                    if hi == 1 {
                        return Ok(eigs);
                    }
                    hi -= 2;
                    continue;
                }
            }
            break;
        }

        if iter >= max_iter {
            return Err(LinAlgError::NumericFailure(format!(
                "QR iteration did not converge in {max_iter} steps"
            )));
        }
        iter += 1;

        // active block [lo, hi]: walk up while subdiagonals stay non-negligible
        let mut lo = hi;
        while lo > 0 {
            let sub = h.get(lo, lo - 1).abs();
            let local = tol.max(1e-15 * (h.get(lo, lo).abs() + h.get(lo - 1, lo - 1).abs()));
            if sub <= local {
                break;
            }
            lo -= 1;
        }
        qr_step(&mut h, lo, hi);
    }
}

/// One unshifted QR step `H := R Q` on the active Hessenberg block, via Givens
/// rotations.
fn qr_step(h: &mut DenseMatrix, lo: usize, hi: usize) {
    let n = h.cols();
    let m = hi - lo + 1;
    if m < 2 {
        return;
    }
    let mut rot: Vec<(f64, f64)> = Vec::with_capacity(m - 1);
    // forward pass: eliminate the subdiagonal (compute Q^T H)
    for k in lo..hi {
        let x = h.get(k, k);
        let y = h.get(k + 1, k);
        let r = x.hypot(y);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) };
        rot.push((c, s));
        for j in k..n {
            let a = h.get(k, j);
            let b = h.get(k + 1, j);
            h.set(k, j, c * a + s * b);
            h.set(k + 1, j, -s * a + c * b);
        }
    }
    // backward pass: apply Q on the right (R Q)
    for (idx, &(c, s)) in rot.iter().enumerate() {
        let k = lo + idx;
        let top = (k + 2).min(hi + 1);
        for i in 0..top {
            let a = h.get(i, k);
            let b = h.get(i, k + 1);
            h.set(i, k, c * a + s * b);
            h.set(i, k + 1, -s * a + c * b);
        }
    }
}

/// Eigenvalues of a real 2x2 block.
fn eig_2x2(a: f64, b: f64, c: f64, d: f64) -> ((f64, f64), (f64, f64)) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        ((tr / 2.0 + sq, 0.0), (tr / 2.0 - sq, 0.0))
    } else {
        let im = (-disc).sqrt();
        ((tr / 2.0, im), (tr / 2.0, -im))
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        // build reflector for column k below the subdiagonal
        let mut x: Vec<f64> = (k + 1..n).map(|i| h.get(i, k)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|v| v * v).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H := P H P with P = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n
        for j in 0..n {
            let dot: f64 = (0..x.len()).map(|i| x[i] * h.get(k + 1 + i, j)).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..x.len() {
                let cur = h.get(k + 1 + i, j);
                h.set(k + 1 + i, j, cur - f * x[i]);
            }
        }
        for i in 0..n {
            let dot: f64 = (0..x.len()).map(|j| x[j] * h.get(i, k + 1 + j)).sum();
            let f = 2.0 * dot / vnorm2;
            for j in 0..x.len() {
                let cur = h.get(i, k + 1 + j);
                h.set(i, k + 1 + j, cur - f * x[j]);
            }
        }
        // entries below the subdiagonal are now numerically zero; clamp them
        for i in (k + 2)..n {
            h.set(i, k, 0.0);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted_descending() {
        let e = sym_eig(&SymMatrix::from_diag(&[3.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, -1.0]);
    }

    #[test]
    fn reconstruction_residual_small() {
        // fixed pseudo-random 5x5 symmetric matrix
        let mut seed = 0x2545f4914f6cdd1d_u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let raw = DenseMatrix::from_fn(5, 5, |_, _| next() * 4.0);
        let s = SymMatrix::from_dense(&raw);
        let e = sym_eig(&s).unwrap();
        let lam = DenseMatrix::from_fn(5, 5, |i, j| if i == j { e.values[i] } else { 0.0 });
        let rec = e.vectors.matmul(&lam).matmul(&e.vectors.transpose());
        let resid = rec.sub(&s.to_dense()).frob_norm();
        let bound = 1e-10 * 5.0 * e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(resid < bound.max(1e-12), "residual {resid} too large");
    }

    #[test]
    fn eigenvectors_orthogonal() {
        let s = SymMatrix::from_row_slice(3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]).unwrap();
        let e = sym_eig(&s).unwrap();
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        let err = vtv.sub(&DenseMatrix::identity(3)).frob_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn general_eigenvalues_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let mut eigs = eigenvalues(&a).unwrap();
        eigs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        assert!((eigs[0].0 + 2.0).abs() < 1e-12);
        assert!((eigs[1].0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pair_detected() {
        // rotation-like matrix: eigenvalues 0.5 +/- 1i
        let a = DenseMatrix::from_rows(&[vec![0.5, -1.0], vec![1.0, 0.5]]).unwrap();
        let eigs = eigenvalues(&a).unwrap();
        for (re, im) in eigs {
            assert!((re - 0.5).abs() < 1e-12);
            assert!((im.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nilpotent_spectrum_is_zero() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        for (re, im) in eigenvalues(&a).unwrap() {
            assert_eq!(re, 0.0);
            assert_eq!(im, 0.0);
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let err = SymMatrix::from_row_slice(2, &[1.0, f64::NAN, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, LinAlgError::InvalidInput(_)));
    }
}
