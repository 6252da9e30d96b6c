//! Direct ADMM on the coupled problem and its map onto Douglas-Rachford.

use super::dr::envelope_from_prox;
use super::trace::{record_from_iterate, IterateSnapshot, Trace};
use super::{check_positive, check_relaxation, norm2, EngineError};
use crate::cone_qp::{ConeQpOptions, ConeQpSolver, PhiProxResult};
use crate::problem::SfLqProblem;
use crate::prox::ProxSpec;
use std::time::Instant;

/// Live ADMM variables (the dual pre-update `u` is kept for inspection).
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub w_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub lambda: Vec<f64>,
    pub u: Vec<f64>,
    pub k: usize,
}

impl AdmmState {
    pub fn zeros(prob: &SfLqProblem) -> Self {
        Self {
            w_tilde: vec![0.0; prob.dims.p * prob.dims.p],
            p_tilde: vec![0.0; prob.dims.mn],
            lambda: vec![0.0; prob.dims.rows()],
            u: vec![0.0; prob.dims.rows()],
            k: 0,
        }
    }
}

/// The initial point used in the reference experiments:
/// `(u0, W~0, lambda0, P~0) = (0, 50 * 1, 0, 0)`.
pub fn paper_default_init(prob: &SfLqProblem) -> AdmmState {
    let mut st = AdmmState::zeros(prob);
    st.w_tilde = vec![50.0; prob.dims.p * prob.dims.p];
    st
}

#[derive(Debug, Clone)]
pub struct AdmmParams {
    pub beta: f64,
    pub xi: f64,
    pub max_iter: usize,
    /// Stop when `||A w~ + B p~|| < tol`.
    pub tol: f64,
    pub record_envelope: bool,
    pub qp_opts: ConeQpOptions,
}

impl AdmmParams {
    pub fn new(beta: f64, xi: f64, max_iter: usize, tol: f64) -> Self {
        Self { beta, xi, max_iter, tol, record_envelope: true, qp_opts: ConeQpOptions::default() }
    }
}

/// Driver holding the warm inner solver of the W-update.
pub struct AdmmDriver<'p> {
    prob: &'p SfLqProblem,
    prox_spec: ProxSpec,
    qp: ConeQpSolver<'p>,
    beta: f64,
    xi: f64,
    qp_opts: ConeQpOptions,
}

impl<'p> AdmmDriver<'p> {
    pub fn new(
        prob: &'p SfLqProblem,
        prox_spec: ProxSpec,
        beta: f64,
        xi: f64,
        qp_opts: ConeQpOptions,
    ) -> Result<Self, EngineError> {
        check_positive("beta", beta)?;
        check_relaxation(xi)?;
        let qp = ConeQpSolver::new_affine(prob, beta)?;
        Ok(Self { prob, prox_spec, qp, beta, xi, qp_opts })
    }

    /// The four-stage update: dual pre-update, W-minimization, dual update,
    /// P-minimization. Also returns the W-stage prox data (its target point
    /// equals the mapped DR point `s_{n+1}`, which makes the envelope free).
    pub fn step(&mut self, st: &AdmmState) -> Result<(AdmmState, PhiProxResult), EngineError> {
        let prob = self.prob;
        let n_star = prob.dims.n_star;
        let beta = self.beta;

        // stage 1: u_{n+1} = lambda_n - beta (1 - xi)(A w~ + B p~)
        let r = prob.affine_residual(&st.w_tilde, &st.p_tilde);
        let a: Vec<f64> = st
            .lambda
            .iter()
            .zip(&r)
            .map(|(l, r)| l - beta * (1.0 - self.xi) * r)
            .collect();

        // stage 2: W-minimization. argmin <c, w> + (beta/2)||A w - b||^2 over
        // the cones with b = -(B p~ + a / beta); b equals the mapped DR point.
        let mut b = vec![0.0; prob.dims.rows()];
        for i in 0..n_star {
            b[i] = -a[i] / beta;
        }
        for k in 0..prob.dims.mn {
            b[n_star + k] = st.p_tilde[k] - a[n_star + k] / beta;
        }
        let qp = self.qp.solve(&b, &self.qp_opts)?;
        let w_next = qp.w_tilde.clone();
        let u_img = prob.apply_a(&w_next);
        let prox = PhiProxResult {
            u: u_img.clone(),
            w_tilde: w_next.clone(),
            value: prob.lq_objective(&w_next),
            qp,
        };

        // stage 3: lambda_{n+1} = u_{n+1} + beta (A w~_{n+1} + B p~_n)
        let r2 = prob.affine_residual(&w_next, &st.p_tilde);
        let lambda: Vec<f64> = a.iter().zip(&r2).map(|(a, r)| a + beta * r).collect();

        // stage 4: P-minimization, a blockwise prox at step 1/beta of the
        // last mn coordinates of A w~_{n+1} + lambda_{n+1} / beta.
        let q: Vec<f64> = u_img
            .iter()
            .zip(&lambda)
            .map(|(u, l)| u + l / beta)
            .collect();
        let p_next = self.prox_spec.apply(&q[n_star..], 1.0 / beta)?;

        Ok((
            AdmmState { w_tilde: w_next, p_tilde: p_next, lambda, u: a, k: st.k + 1 },
            prox,
        ))
    }

}

/// One-shot step without a persistent driver.
pub fn admm_step(
    state: &AdmmState,
    prob: &SfLqProblem,
    beta: f64,
    xi: f64,
    prox_spec: &ProxSpec,
    qp_opts: &ConeQpOptions,
) -> Result<AdmmState, EngineError> {
    let mut driver = AdmmDriver::new(prob, prox_spec.clone(), beta, xi, qp_opts.clone())?;
    Ok(driver.step(state)?.0)
}

/// A DR-space point mapped from ADMM variables.
#[derive(Debug, Clone)]
pub struct DrPoint {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub eta: f64,
}

/// The lemma's change of variables:
/// `s = A w~ - lambda / beta`, `u = A w~`, `v = -B p~`, `eta = 1/beta`.
pub fn map_admm_to_dr(
    w_tilde: &[f64],
    p_tilde: &[f64],
    lambda: &[f64],
    beta: f64,
    prob: &SfLqProblem,
) -> Result<DrPoint, EngineError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(EngineError::Invalid(format!("beta must be > 0, got {beta}")));
    }
    let u = prob.apply_a(w_tilde);
    let s: Vec<f64> = u.iter().zip(lambda).map(|(u, l)| u - l / beta).collect();
    let mut v = vec![0.0; prob.dims.rows()];
    v[prob.dims.n_star..].copy_from_slice(p_tilde);
    Ok(DrPoint { s, u, v, eta: 1.0 / beta })
}

/// A finished ADMM run.
#[derive(Debug)]
pub struct AdmmRun {
    pub trace: Trace,
    pub history: Vec<IterateSnapshot>,
    pub state: AdmmState,
    pub best_residual: f64,
}

/// Run ADMM until `||A w~ + B p~|| < tol` or the iteration cap. Inner
/// failures abort immediately with the partial trace.
pub fn run_admm(
    prob: &SfLqProblem,
    params: &AdmmParams,
    prox_spec: &ProxSpec,
    init: &AdmmState,
) -> Result<AdmmRun, EngineError> {
    let mut driver =
        AdmmDriver::new(prob, prox_spec.clone(), params.beta, params.xi, params.qp_opts.clone())?;
    let mut state = init.clone();
    let mut trace = Trace::default();
    let mut history = Vec::with_capacity(params.max_iter);
    let mut best_residual = f64::INFINITY;

    for k in 1..=params.max_iter {
        let started = Instant::now();
        let (next, prox) = match driver.step(&state) {
            Ok(out) => out,
            Err(EngineError::Qp(e)) => {
                return Err(EngineError::Aborted {
                    iteration: k,
                    reason: format!("inner solve failed: {e}"),
                    trace: Box::new(trace),
                })
            }
            Err(other) => return Err(other),
        };
        let residual = norm2(&prob.affine_residual(&next.w_tilde, &next.p_tilde));
        best_residual = best_residual.min(residual);
        let envelope = if params.record_envelope {
            // the W-stage target is the mapped s_{n+1}
            let mapped =
                map_admm_to_dr(&next.w_tilde, &state.p_tilde, &next.lambda, params.beta, prob)?;
            Some(envelope_from_prox(&prox, &mapped.s, 1.0 / params.beta, prob, prox_spec)?)
        } else {
            None
        };
        history.push(IterateSnapshot::new(
            k,
            next.w_tilde.clone(),
            next.p_tilde.clone(),
            prob,
        ));
        trace.records.push(record_from_iterate(
            prob,
            k,
            residual,
            &next.w_tilde,
            &next.p_tilde,
            envelope,
            started.elapsed().as_secs_f64() * 1e3,
        ));
        state = next;
        if params.tol.is_finite() && residual < params.tol {
            break;
        }
    }
    Ok(AdmmRun { trace, history, state, best_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problem::{build_block_index, build_constraints, BlockPartition, SystemData};

    fn example1() -> SystemData {
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
        SystemData::new(a, b2, DenseMatrix::identity(3), c, d).unwrap()
    }

    fn prob_and_spec(gamma: f64) -> (crate::problem::SfLqProblem, ProxSpec) {
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let prob = build_constraints(&example1(), &part, gamma).unwrap();
        let spec = ProxSpec::group_l0(gamma, build_block_index(&part)).unwrap();
        (prob, spec)
    }

    #[test]
    fn xi_one_collapses_dual_preupdate() {
        let (prob, spec) = prob_and_spec(10.0);
        let mut st = paper_default_init(&prob);
        st.lambda = vec![0.25; prob.dims.rows()];
        let next = admm_step(&st, &prob, 10.0, 1.0, &spec, &ConeQpOptions::default()).unwrap();
        // with xi = 1 the pre-update term vanishes: u_{n+1} = lambda_n
        for (u, l) in next.u.iter().zip(&st.lambda) {
            assert_eq!(u, l);
        }
    }

    #[test]
    fn map_trivial_cases() {
        let (prob, _) = prob_and_spec(1.0);
        let w = vec![1.0; 25];
        let p = vec![0.5; 6];
        let zero_l = vec![0.0; 8];
        let mapped = map_admm_to_dr(&w, &p, &zero_l, 10.0, &prob).unwrap();
        // lambda = 0 -> s = u = A w~
        for (s, u) in mapped.s.iter().zip(&mapped.u) {
            assert_eq!(s, u);
        }
        // v carries P~ after the head zeros
        assert_eq!(&mapped.v[..2], &[0.0, 0.0]);
        assert_eq!(&mapped.v[2..], &p[..]);
        let mapped0 = map_admm_to_dr(&w, &vec![0.0; 6], &zero_l, 10.0, &prob).unwrap();
        assert!(norm2(&mapped0.v) == 0.0);
        assert!(map_admm_to_dr(&w, &p, &zero_l, -1.0, &prob).is_err());
    }

    #[test]
    fn paper_init_shape() {
        let (prob, _) = prob_and_spec(1.0);
        let st = paper_default_init(&prob);
        assert_eq!(st.w_tilde, vec![50.0; 25]);
        assert_eq!(st.p_tilde, vec![0.0; 6]);
        assert_eq!(st.lambda, vec![0.0; 8]);
        assert_eq!(st.u, vec![0.0; 8]);
    }

    #[test]
    fn zero_max_iter_returns_init() {
        let (prob, spec) = prob_and_spec(10.0);
        let params = AdmmParams::new(10.0, 0.5, 0, 1e-9);
        let init = paper_default_init(&prob);
        let run = run_admm(&prob, &params, &spec, &init).unwrap();
        assert!(run.trace.is_empty());
        assert_eq!(run.state.w_tilde, init.w_tilde);
    }

    #[test]
    fn short_run_decreases_residual() {
        let (prob, spec) = prob_and_spec(10.0);
        let mut params = AdmmParams::new(10.0, 0.5, 30, 0.0);
        params.record_envelope = false;
        let init = paper_default_init(&prob);
        let run = run_admm(&prob, &params, &spec, &init).unwrap();
        assert_eq!(run.trace.len(), 30);
        let first = run.trace.records.first().unwrap().residual_affine;
        assert!(
            run.best_residual < first,
            "best residual {} should improve on the first {first}",
            run.best_residual
        );
    }
}
