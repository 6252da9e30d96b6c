//! First-order stationarity check: try to write `A^T s - vec(R)` as a sum of
//! normal-cone elements at the current cone variables.

use super::{norm2, EngineError};
use crate::linalg::{psd_project, sym_eig, unvec_mat, vec_mat, DenseMatrix, SymMatrix};
use crate::problem::SfLqProblem;

#[derive(Debug, Clone)]
pub struct StationarityReport {
    /// `|| A^T s - vec(R) - nu_0 - sum_i H_i^T nu_i ||` after the fit.
    pub fit_residual: f64,
    /// `|<nu_i, cone variable>|` per cone (zero by construction of the fit).
    pub complementarity_gaps: Vec<f64>,
    /// Largest eigenvalue of each multiplier (must be <= 0 for membership).
    pub multiplier_max_eig: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// Feasibility of one multiplier candidate against its cone variable:
/// returns `(max eigenvalue, |<nu, x>|)`; membership in the normal cone
/// needs the first `<= 0` and the second `= 0`.
pub fn multiplier_feasibility(nu: &[f64], cone_var: &[f64], side: usize) -> (f64, f64) {
    let m = SymMatrix::from_dense(
        &unvec_mat(nu, side, side).expect("multiplier length must be side^2"),
    );
    let top = sym_eig(&m).map(|e| e.values[0]).unwrap_or(f64::INFINITY);
    let gap: f64 = nu.iter().zip(cone_var).map(|(a, b)| a * b).sum();
    (top, gap.abs())
}

/// Projection onto the normal cone of the PSD cone at `X >= 0`, viewed in
/// the full matrix space: the symmetric part must be NSD and supported on
/// the null space of `X`, while the antisymmetric part is free (the cone
/// lives inside the symmetric subspace, so orthogonal directions cost
/// nothing).
fn project_normal_cone(nu: &[f64], x: &SymMatrix) -> Result<Vec<f64>, EngineError> {
    let side = x.dim();
    let full = unvec_mat(nu, side, side)?;
    let anti = full.sub(&full.transpose()).scale(0.5);
    let e = sym_eig(x)?;
    let lam_max = e.values[0].max(0.0);
    let null_tol = 1e-7 * lam_max.max(1.0);
    let null_cols: Vec<usize> =
        (0..side).filter(|&k| e.values[k] <= null_tol).collect();
    if null_cols.is_empty() {
        return Ok(vec_mat(&anti));
    }
    let basis = DenseMatrix::from_fn(side, null_cols.len(), |i, j| e.vectors.get(i, null_cols[j]));
    let nu_mat = SymMatrix::from_dense(&full).to_dense();
    let reduced = basis.transpose().matmul(&nu_mat).matmul(&basis);
    // NSD projection of the reduced block: negate, project to PSD, negate
    let nsd = psd_project(&SymMatrix::from_dense(&reduced.scale(-1.0)))?.scale(-1.0);
    let back = basis.matmul(&nsd.to_dense()).matmul(&basis.transpose()).add(&anti);
    Ok(vec_mat(&back))
}

/// Attempt the decomposition
/// `A^T s - vec(R) = nu_0 + sum_i H_i^T nu_i` with each `nu` in the normal
/// cone of its PSD cone at the current iterate, by projected gradient on the
/// least-squares fit. Report-only: never fails the caller.
pub fn stationarity_check(
    w_tilde: &[f64],
    s: &[f64],
    prob: &SfLqProblem,
    tol: f64,
) -> Result<StationarityReport, EngineError> {
    let target: Vec<f64> = prob
        .apply_at(s)
        .iter()
        .zip(&prob.cost)
        .map(|(a, c)| a - c)
        .collect();

    // cone variables at the iterate
    let w_mat = prob.w_mat(w_tilde)?;
    let mut cone_vars: Vec<SymMatrix> = vec![w_mat];
    for i in 0..prob.cone_maps.len() {
        cone_vars.push(prob.psi(i, w_tilde)?);
    }
    let sides: Vec<usize> = cone_vars.iter().map(|x| x.dim()).collect();
    let mut nus: Vec<Vec<f64>> =
        sides.iter().map(|&side| vec![0.0; side * side]).collect();

    // Lipschitz estimate for the least-squares gradient by power iteration
    // on the composite Gram operator
    let dim = prob.cost.len();
    let mut pv: Vec<f64> = (0..dim).map(|i| ((i * 2654435761 + 1) % 97) as f64 / 97.0 - 0.5).collect();
    let mut lam = 1.0_f64;
    for _ in 0..30 {
        // G G^T applied in x-space: v -> v + sum_i H_i^T H_i v
        let mut next = pv.clone();
        for cm in &prob.cone_maps {
            let hv = cm.h.matvec(&pv);
            let back = cm.h.tr_matvec(&hv);
            for (n, b) in next.iter_mut().zip(&back) {
                *n += b;
            }
        }
        lam = norm2(&next).max(1e-12);
        for v in next.iter_mut() {
            *v /= lam;
        }
        pv = next;
    }
    let step = 1.0 / (2.0 * lam.max(1.0));

    let residual = |nus: &[Vec<f64>]| -> Vec<f64> {
        let mut r = target.clone();
        for (r, v) in r.iter_mut().zip(&nus[0]) {
            *r -= v;
        }
        for (i, nu) in nus.iter().enumerate().skip(1) {
            let back = prob.cone_maps[i - 1].h.tr_matvec(nu);
            for (r, v) in r.iter_mut().zip(&back) {
                *r -= v;
            }
        }
        r
    };

    let mut res = residual(&nus);
    for _ in 0..5000 {
        // gradient of ||res||^2 in nu_k is -2 G_k res
        for k in 0..nus.len() {
            let g: Vec<f64> = if k == 0 {
                res.clone()
            } else {
                prob.cone_maps[k - 1].h.matvec(&res)
            };
            for (nu, gv) in nus[k].iter_mut().zip(&g) {
                *nu += 2.0 * step * gv;
            }
            nus[k] = project_normal_cone(&nus[k], &cone_vars[k])?;
        }
        let new_res = residual(&nus);
        let improved = norm2(&res) - norm2(&new_res);
        res = new_res;
        if improved.abs() < 1e-14 {
            break;
        }
    }

    let fit_residual = norm2(&res);
    let mut complementarity_gaps = Vec::with_capacity(nus.len());
    let mut multiplier_max_eig = Vec::with_capacity(nus.len());
    for (k, nu) in nus.iter().enumerate() {
        let cone_vec = vec_mat(&cone_vars[k].to_dense());
        let (top, gap) = multiplier_feasibility(nu, &cone_vec, sides[k]);
        multiplier_max_eig.push(top);
        complementarity_gaps.push(gap);
    }
    Ok(StationarityReport {
        fit_residual,
        complementarity_gaps,
        multiplier_max_eig,
        tol,
        passed: fit_residual < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_qp::{grad_phi1_from_prox, prox_phi1, ConeQpOptions};
    use crate::linalg::DenseMatrix;
    use crate::problem::{build_constraints, BlockPartition, SystemData};

    fn shifted_example1() -> SystemData {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let b2 = DenseMatrix::from_rows(&[
            vec![0.9315, 0.7939],
            vec![0.9722, 0.1061],
            vec![0.5317, 0.7750],
        ])
        .unwrap();
        let c = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let d = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        SystemData::new(a, b2, DenseMatrix::identity(3), c, d).unwrap().shifted(-2.0)
    }

    #[test]
    fn interior_iterate_forces_zero_multipliers() {
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let prob = build_constraints(&shifted_example1(), &part, 1.0).unwrap();
        // a strictly feasible interior W
        let sys = shifted_example1();
        let q = SymMatrix::from_dense(
            &sys.b1.matmul(&sys.b1.transpose()).add(&DenseMatrix::identity(3)),
        );
        let w1 = crate::linalg::lyapunov_solve(&sys.a, &q).unwrap();
        let mut w = DenseMatrix::zeros(5, 5);
        w.set_block(0, 0, &w1.to_dense());
        w.set_block(3, 3, &DenseMatrix::identity(2));
        let w_vec = vec_mat(&w);
        // any s: the symmetric multiplier parts project to zero, so the fit
        // residual is the symmetric part of A^T s - vec(R) (the cone has no
        // interior in R^{p^2}; antisymmetric directions are always normal)
        let s = vec![0.1; prob.dims.rows()];
        let rep = stationarity_check(&w_vec, &s, &prob, 1e-3).unwrap();
        let raw: Vec<f64> = prob
            .apply_at(&s)
            .iter()
            .zip(&prob.cost)
            .map(|(a, c)| a - c)
            .collect();
        let raw_sym = SymMatrix::from_dense(
            &crate::linalg::unvec_mat(&raw, prob.dims.p, prob.dims.p).unwrap(),
        );
        assert!(
            (rep.fit_residual - raw_sym.frob_norm()).abs() < 1e-6,
            "fit {} vs sym norm {}",
            rep.fit_residual,
            raw_sym.frob_norm()
        );
        for gap in &rep.complementarity_gaps {
            assert!(*gap < 1e-10);
        }
    }

    #[test]
    fn converged_prox_point_passes() {
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let prob = build_constraints(&shifted_example1(), &part, 1.0).unwrap();
        let mut seed = 0x1234_u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let s: Vec<f64> = (0..prob.dims.rows()).map(|_| next()).collect();
        let eta = 0.1;
        let prox = prox_phi1(&s, eta, &prob, &ConeQpOptions::tight()).unwrap();
        let v = grad_phi1_from_prox(&s, &prox.u, eta);
        let rep = stationarity_check(&prox.w_tilde, &v, &prob, 1e-5).unwrap();
        assert!(
            rep.passed,
            "converged prox point must pass stationarity (residual {})",
            rep.fit_residual
        );
        for top in &rep.multiplier_max_eig {
            assert!(*top <= 1e-9);
        }
    }

    #[test]
    fn constructed_violation_is_flagged() {
        // a multiplier that is PSD (not NSD) and not complementary
        let x = vec_mat(&DenseMatrix::identity(2));
        let nu = vec_mat(&DenseMatrix::identity(2));
        let (top, gap) = multiplier_feasibility(&nu, &x, 2);
        assert!(top > 0.0, "violation must be flagged via a positive eigenvalue");
        assert!(gap > 1.0);
    }
}
