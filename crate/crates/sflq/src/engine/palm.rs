//! PALM baseline on the penalty formulation
//! `min f(w~) + g(p~) + (rho/2)||A w~ + B p~||^2`.

use super::trace::{record_from_iterate, IterateSnapshot, Trace};
use super::{check_positive, norm2, EngineError};
use crate::cone_qp::{ConeQpOptions, ConeQpSolver};
use crate::problem::SfLqProblem;
use crate::prox::ProxSpec;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct PalmParams {
    /// Dual step scaling.
    pub sigma: f64,
    /// Prox-of-f weight.
    pub beta: f64,
    /// W-step damping.
    pub tau: f64,
    /// P-step constant (prox step `1/mu`).
    pub mu: f64,
    /// Penalty weight of `H`.
    pub rho: f64,
    pub max_iter: usize,
    /// Stop when `||A w~ + B p~|| < tol`.
    pub tol: f64,
    pub qp_opts: ConeQpOptions,
}

impl PalmParams {
    pub fn new(sigma: f64, beta: f64, tau: f64, mu: f64, rho: f64, max_iter: usize, tol: f64) -> Self {
        Self { sigma, beta, tau, mu, rho, max_iter, tol, qp_opts: ConeQpOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PalmState {
    pub w_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub u: Vec<f64>,
    pub k: usize,
}

impl PalmState {
    pub fn zeros(prob: &SfLqProblem) -> Self {
        let d = prob.dims.p * prob.dims.p;
        Self { w_tilde: vec![0.0; d], p_tilde: vec![0.0; prob.dims.mn], u: vec![0.0; d], k: 0 }
    }
}

#[derive(Debug)]
pub struct PalmRun {
    pub trace: Trace,
    pub history: Vec<IterateSnapshot>,
    pub state: PalmState,
    pub best_residual: f64,
}

/// `grad_P H(w~, p~) = rho B^T (A w~ + B p~)`, which is `-rho` times the last
/// `mn` coordinates of the residual.
pub(crate) fn grad_p_penalty(prob: &SfLqProblem, rho: f64, residual: &[f64]) -> Vec<f64> {
    residual[prob.dims.n_star..].iter().map(|r| -rho * r).collect()
}

/// Run the four-line PALM iteration.
pub fn palm_run(
    prob: &SfLqProblem,
    params: &PalmParams,
    prox_spec: &ProxSpec,
    init: &PalmState,
) -> Result<PalmRun, EngineError> {
    check_positive("sigma", params.sigma)?;
    check_positive("beta", params.beta)?;
    check_positive("tau", params.tau)?;
    check_positive("mu", params.mu)?;
    if params.rho < 0.0 || !params.rho.is_finite() {
        return Err(EngineError::Invalid(format!("rho must be >= 0, got {}", params.rho)));
    }

    let mut qp = ConeQpSolver::new_identity(prob, params.beta)?;
    let mut state = init.clone();
    let mut trace = Trace::default();
    let mut history = Vec::with_capacity(params.max_iter);
    let mut best_residual = f64::INFINITY;

    for k in 1..=params.max_iter {
        let started = Instant::now();

        // P step: prox-gradient with step 1/mu
        let r = prob.affine_residual(&state.w_tilde, &state.p_tilde);
        let grad_p = grad_p_penalty(prob, params.rho, &r);
        let p_arg: Vec<f64> =
            state.p_tilde.iter().zip(&grad_p).map(|(p, g)| p - g / params.mu).collect();
        let p_next = prox_spec.apply(&p_arg, 1.0 / params.mu)?;

        // z step: prox of f at w~ + u / beta
        let z_arg: Vec<f64> =
            state.w_tilde.iter().zip(&state.u).map(|(w, u)| w + u / params.beta).collect();
        let z = match qp.solve(&z_arg, &params.qp_opts) {
            Ok(res) => res.w_tilde,
            Err(e) => {
                return Err(EngineError::Aborted {
                    iteration: k,
                    reason: format!("prox of f failed: {e}"),
                    trace: Box::new(trace),
                })
            }
        };

        // W step: gradient correction
        let r_new = prob.affine_residual(&state.w_tilde, &p_next);
        let grad_w: Vec<f64> = prob.apply_at(&r_new).iter().map(|v| params.rho * v).collect();
        let w_next: Vec<f64> = state
            .w_tilde
            .iter()
            .zip(grad_w.iter().zip(state.u.iter().zip(&z)))
            .map(|(w, (g, (u, z)))| w - (g + u + params.beta * (w - z)) / params.tau)
            .collect();

        // dual step
        let u_next: Vec<f64> = state
            .u
            .iter()
            .zip(w_next.iter().zip(&z))
            .map(|(u, (w, z))| u + params.sigma * params.beta * (w - z))
            .collect();

        let next = PalmState { w_tilde: w_next, p_tilde: p_next, u: u_next, k: state.k + 1 };
        let residual = norm2(&prob.affine_residual(&next.w_tilde, &next.p_tilde));
        best_residual = best_residual.min(residual);
        history.push(IterateSnapshot::new(k, next.w_tilde.clone(), next.p_tilde.clone(), prob));
        trace.records.push(record_from_iterate(
            prob,
            k,
            residual,
            &next.w_tilde,
            &next.p_tilde,
            None,
            started.elapsed().as_secs_f64() * 1e3,
        ));
        state = next;
        if params.tol.is_finite() && residual < params.tol {
            break;
        }
    }
    Ok(PalmRun { trace, history, state, best_residual })
}
