//! Subgradient descent on the DC-relaxed reduced problem
//! `min_{s2} (A f)(U s2) + gamma theta(s2)` with
//! `theta = ||.||_{s,t;1} - env_alpha ||.||_{s,t;1}`.

use super::trace::{record_from_iterate, IterateSnapshot, Trace};
use super::{check_positive, norm2, EngineError};
use crate::cone_qp::{ConeQpOptions, ConeQpSolver, phi_prox_with};
use crate::problem::SfLqProblem;
use crate::prox::{prox_group_l1, ProxSpec};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct SubgradDcParams {
    pub gamma: f64,
    /// Moreau-envelope parameter of the DC relaxation.
    pub alpha: f64,
    /// Initial step size; steps decay as `alpha0 / sqrt(k + 1)`.
    pub alpha0: f64,
    /// Smoothing step for the `phi_1` gradient surrogate.
    pub eta_sm: f64,
    pub max_iter: usize,
    pub qp_opts: ConeQpOptions,
}

impl SubgradDcParams {
    pub fn new(gamma: f64, alpha: f64, alpha0: f64, eta_sm: f64, max_iter: usize) -> Self {
        Self { gamma, alpha, alpha0, eta_sm, max_iter, qp_opts: ConeQpOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SubgradDcState {
    pub s2: Vec<f64>,
    pub alpha_step: f64,
    pub k: usize,
    pub eta_sm: f64,
}

#[derive(Debug)]
pub struct SubgradDcRun {
    pub trace: Trace,
    pub history: Vec<IterateSnapshot>,
    pub state: SubgradDcState,
    /// Best smoothed objective and its iterate.
    pub best_value: f64,
    pub best_s2: Vec<f64>,
    pub best_w_tilde: Vec<f64>,
}

/// Deterministic Clarke subgradient selection of
/// `theta = ||.||_{s,t;1} - env_alpha ||.||_{s,t;1}`:
/// blockwise `z/||z||` (zero at zero blocks) minus the envelope gradient
/// `(z - prox_{alpha l1}(z)) / alpha`. At `s2 = 0` both terms vanish.
pub fn theta_subgradient(
    s2: &[f64],
    alpha: f64,
    base_spec: &ProxSpec,
) -> Result<Vec<f64>, EngineError> {
    let prox = prox_group_l1(s2, alpha, base_spec)?;
    let mut out = vec![0.0; s2.len()];
    for set in base_spec.idx.sets() {
        let r: f64 = set.iter().map(|&k| s2[k] * s2[k]).sum::<f64>().sqrt();
        for &k in set {
            let sub_l1 = if r > 0.0 { s2[k] / r } else { 0.0 };
            let env_grad = (s2[k] - prox[k]) / alpha;
            out[k] = sub_l1 - env_grad;
        }
    }
    Ok(out)
}

/// Run the subgradient method with diminishing steps and best-iterate
/// tracking. The tracked objective is the eta-smoothed value
/// `env_{eta} phi_1(U s2) + gamma theta(s2)`.
pub fn subgrad_dc_run(
    prob: &SfLqProblem,
    params: &SubgradDcParams,
    init_s2: &[f64],
) -> Result<SubgradDcRun, EngineError> {
    check_positive("alpha", params.alpha)?;
    check_positive("alpha0", params.alpha0)?;
    check_positive("eta_sm", params.eta_sm)?;
    if params.gamma < 0.0 {
        return Err(EngineError::Invalid("gamma must be >= 0".into()));
    }
    if init_s2.len() != prob.dims.mn {
        return Err(EngineError::Invalid(format!(
            "initial s2 must have length {}, got {}",
            prob.dims.mn,
            init_s2.len()
        )));
    }
    // base l1 penalty (unit weight) for the DC pieces
    let base_spec = ProxSpec::group_l1(1.0, prob.block_index.clone())?;
    let theta_value_spec = ProxSpec::dc_envelope(1.0, params.alpha, prob.block_index.clone())?;

    let mut qp = ConeQpSolver::new_affine(prob, 1.0 / params.eta_sm)?;
    let n_star = prob.dims.n_star;
    let mut state = SubgradDcState {
        s2: init_s2.to_vec(),
        alpha_step: params.alpha0,
        k: 0,
        eta_sm: params.eta_sm,
    };
    let mut trace = Trace::default();
    let mut history = Vec::with_capacity(params.max_iter);
    let mut best_value = f64::INFINITY;
    let mut best_s2 = state.s2.clone();
    let mut best_w = vec![0.0; prob.dims.p * prob.dims.p];

    for k in 1..=params.max_iter {
        let started = Instant::now();
        // lift s2 into the full splitting space: w = U s2
        let mut w_full = vec![0.0; prob.dims.rows()];
        w_full[n_star..].copy_from_slice(&state.s2);
        let prox = match phi_prox_with(&mut qp, &w_full, prob, &params.qp_opts) {
            Ok(p) => p,
            Err(e) => {
                return Err(EngineError::Aborted {
                    iteration: k,
                    reason: format!("phi_1 surrogate failed: {e}"),
                    trace: Box::new(trace),
                })
            }
        };
        // smoothed objective value
        let dist2: f64 =
            w_full.iter().zip(&prox.u).map(|(a, b)| (a - b) * (a - b)).sum();
        let value = prox.value
            + dist2 / (2.0 * params.eta_sm)
            + params.gamma * theta_value_spec.penalty_value(&state.s2);
        if value < best_value {
            best_value = value;
            best_s2 = state.s2.clone();
            best_w = prox.w_tilde.clone();
        }

        // direction: phi_1 surrogate gradient restricted through U, plus the
        // DC subgradient
        let d_phi: Vec<f64> = w_full[n_star..]
            .iter()
            .zip(&prox.u[n_star..])
            .map(|(w, u)| (w - u) / params.eta_sm)
            .collect();
        let d_theta = theta_subgradient(&state.s2, params.alpha, &base_spec)?;
        state.alpha_step = params.alpha0 / ((k as f64) + 1.0).sqrt();
        for ((s, dp), dt) in state.s2.iter_mut().zip(&d_phi).zip(&d_theta) {
            *s -= state.alpha_step * (dp + params.gamma * dt);
        }
        state.k = k;

        let residual = norm2(&d_phi);
        history.push(IterateSnapshot::new(
            k,
            prox.w_tilde.clone(),
            state.s2.clone(),
            prob,
        ));
        trace.records.push(record_from_iterate(
            prob,
            k,
            residual,
            &prox.w_tilde,
            &state.s2,
            None,
            started.elapsed().as_secs_f64() * 1e3,
        ));
    }
    Ok(SubgradDcRun { trace, history, state, best_value, best_s2, best_w_tilde: best_w })
}
