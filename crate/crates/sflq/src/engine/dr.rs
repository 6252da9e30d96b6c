//! Douglas-Rachford splitting on the epi-composition form
//! `min phi_1(s) + phi_2(s)`, plus the DR envelope diagnostic.

use super::trace::{record_from_iterate, IterateSnapshot, Trace};
use super::{check_positive, check_relaxation, norm2, sub_vec, EngineError};
use crate::cone_qp::{
    grad_phi1_from_prox, phi_prox_with, prox_phi1, ConeQpOptions, ConeQpSolver, PhiProxResult,
};
use crate::problem::SfLqProblem;
use crate::prox::{prox_phi2, ProxSpec};
use std::time::Instant;

/// Live DR variables.
#[derive(Debug, Clone)]
pub struct DrState {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Witness minimizer behind `u = A w~`.
    pub w_tilde: Vec<f64>,
    pub k: usize,
}

impl DrState {
    pub fn from_s(s: Vec<f64>, prob: &SfLqProblem) -> Self {
        let dim = s.len();
        Self {
            s,
            u: vec![0.0; dim],
            v: vec![0.0; dim],
            w_tilde: vec![0.0; prob.dims.p * prob.dims.p],
            k: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DrParams {
    pub eta: f64,
    pub xi: f64,
    pub max_iter: usize,
    /// Stop when `||u_k - v_k|| < tol`.
    pub tol: f64,
    /// Record the DR envelope column.
    pub record_envelope: bool,
    pub qp_opts: ConeQpOptions,
}

impl DrParams {
    pub fn new(eta: f64, xi: f64, max_iter: usize, tol: f64) -> Self {
        Self { eta, xi, max_iter, tol, record_envelope: true, qp_opts: ConeQpOptions::default() }
    }
}

/// Driver holding the warm inner solver for `prox_{eta phi_1}`.
pub struct DrDriver<'p> {
    prob: &'p SfLqProblem,
    prox_spec: ProxSpec,
    qp: ConeQpSolver<'p>,
    eta: f64,
    xi: f64,
    qp_opts: ConeQpOptions,
}

impl<'p> DrDriver<'p> {
    pub fn new(
        prob: &'p SfLqProblem,
        prox_spec: ProxSpec,
        eta: f64,
        xi: f64,
        qp_opts: ConeQpOptions,
    ) -> Result<Self, EngineError> {
        check_positive("eta", eta)?;
        check_relaxation(xi)?;
        let qp = ConeQpSolver::new_affine(prob, 1.0 / eta)?;
        Ok(Self { prob, prox_spec, qp, eta, xi, qp_opts })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Halve the prox step (retry path after an inner failure).
    pub fn halve_eta(&mut self) -> Result<(), EngineError> {
        self.eta *= 0.5;
        self.qp = ConeQpSolver::new_affine(self.prob, 1.0 / self.eta)?;
        Ok(())
    }

    /// One step in the displayed scheme order:
    /// `u+ = prox_{eta phi1}(s)`, `v+ = prox_{eta phi2}(2u+ - s)`,
    /// `s+ = s + xi (v+ - u+)`. Also returns the prox result for reuse.
    pub fn step(&mut self, state: &DrState) -> Result<(DrState, PhiProxResult), EngineError> {
        let prox = phi_prox_with(&mut self.qp, &state.s, self.prob, &self.qp_opts)?;
        let reflect: Vec<f64> =
            prox.u.iter().zip(&state.s).map(|(u, s)| 2.0 * u - s).collect();
        let v = prox_phi2(&reflect, self.eta, &self.prox_spec, self.prob.dims.n_star)?;
        let s_next: Vec<f64> = state
            .s
            .iter()
            .zip(prox.u.iter().zip(&v))
            .map(|(s, (u, v))| s + self.xi * (v - u))
            .collect();
        Ok((
            DrState {
                s: s_next,
                u: prox.u.clone(),
                v,
                w_tilde: prox.w_tilde.clone(),
                k: state.k + 1,
            },
            prox,
        ))
    }

    /// One step in the lemma's restated order: `s+ = s + xi (v - u)` from the
    /// old pair, then both prox evaluations at the new point.
    pub fn step_lemma_order(
        &mut self,
        state: &DrState,
    ) -> Result<(DrState, PhiProxResult), EngineError> {
        let s_next: Vec<f64> = state
            .s
            .iter()
            .zip(state.u.iter().zip(&state.v))
            .map(|(s, (u, v))| s + self.xi * (v - u))
            .collect();
        let prox = phi_prox_with(&mut self.qp, &s_next, self.prob, &self.qp_opts)?;
        let reflect: Vec<f64> =
            prox.u.iter().zip(&s_next).map(|(u, s)| 2.0 * u - s).collect();
        let v = prox_phi2(&reflect, self.eta, &self.prox_spec, self.prob.dims.n_star)?;
        Ok((
            DrState {
                s: s_next,
                u: prox.u.clone(),
                v,
                w_tilde: prox.w_tilde.clone(),
                k: state.k + 1,
            },
            prox,
        ))
    }
}

/// One-shot DR step (scheme order) without a persistent driver.
pub fn dr_step(
    state: &DrState,
    prob: &SfLqProblem,
    eta: f64,
    xi: f64,
    prox_spec: &ProxSpec,
    qp_opts: &ConeQpOptions,
) -> Result<DrState, EngineError> {
    let mut driver = DrDriver::new(prob, prox_spec.clone(), eta, xi, qp_opts.clone())?;
    Ok(driver.step(state)?.0)
}

/// One-shot DR step in the lemma's ordering.
pub fn dr_step_lemma_order(
    state: &DrState,
    prob: &SfLqProblem,
    eta: f64,
    xi: f64,
    prox_spec: &ProxSpec,
    qp_opts: &ConeQpOptions,
) -> Result<DrState, EngineError> {
    let mut driver = DrDriver::new(prob, prox_spec.clone(), eta, xi, qp_opts.clone())?;
    Ok(driver.step_lemma_order(state)?.0)
}

/// DR envelope value computed from an existing prox evaluation at `s`:
///
/// ```text
/// phi_eta(s) = min_{w1 = 0, w2} { pen(w2) + phi1(u) + <grad, w - u>
///                                 + ||w - u||^2 / (2 eta) }
/// ```
///
/// with `u = prox_{eta phi1}(s)` and `grad = (s - u)/eta`; the inner minimum
/// is closed-form after completing the square (the `w2` part is one blockwise
/// prox of the penalty).
pub fn envelope_from_prox(
    prox: &PhiProxResult,
    s: &[f64],
    eta: f64,
    prob: &SfLqProblem,
    spec: &ProxSpec,
) -> Result<f64, EngineError> {
    let grad = grad_phi1_from_prox(s, &prox.u, eta);
    let n_star = prob.dims.n_star;
    let (u1, u2) = prox.u.split_at(n_star);
    let (g1, g2) = grad.split_at(n_star);
    let c2: Vec<f64> = u2.iter().zip(g2).map(|(u, g)| u - eta * g).collect();
    let w2 = spec.apply(&c2, eta)?;
    let pen = spec.penalty_value(&w2);
    let quad: f64 =
        w2.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * eta);
    let head: f64 = -g1.iter().zip(u1).map(|(g, u)| g * u).sum::<f64>()
        + u1.iter().map(|u| u * u).sum::<f64>() / (2.0 * eta);
    let g2_term = eta / 2.0 * g2.iter().map(|g| g * g).sum::<f64>();
    Ok(prox.value + head - g2_term + pen + quad)
}

/// Standalone envelope evaluation (runs its own prox).
pub fn envelope_value(
    s: &[f64],
    eta: f64,
    prob: &SfLqProblem,
    spec: &ProxSpec,
    qp_opts: &ConeQpOptions,
) -> Result<f64, EngineError> {
    check_positive("eta", eta)?;
    let prox = prox_phi1(s, eta, prob, qp_opts)?;
    envelope_from_prox(&prox, s, eta, prob, spec)
}

/// Empirical Lipschitz estimate for `grad phi_1`, sampled from prox gradient
/// differences at pseudo-random points (deterministic in `seed`).
pub fn estimate_lipschitz(
    prob: &SfLqProblem,
    eta_probe: f64,
    samples: usize,
    seed: u64,
    qp_opts: &ConeQpOptions,
) -> Result<f64, EngineError> {
    let mut state = seed.max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let dim = prob.dims.rows();
    let mut solver = ConeQpSolver::new_affine(prob, 1.0 / eta_probe)?;
    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s: Vec<f64> = (0..dim).map(|_| next() * 2.0).collect();
        let prox = phi_prox_with(&mut solver, &s, prob, qp_opts)?;
        let g = grad_phi1_from_prox(&s, &prox.u, eta_probe);
        grads.push((prox.u, g));
    }
    let mut l_hat = 0.0_f64;
    for i in 0..grads.len() {
        for j in (i + 1)..grads.len() {
            let du = norm2(&sub_vec(&grads[i].0, &grads[j].0));
            if du < 1e-9 {
                continue;
            }
            let dg = norm2(&sub_vec(&grads[i].1, &grads[j].1));
            l_hat = l_hat.max(dg / du);
        }
    }
    Ok(l_hat.max(1e-12))
}

/// A finished DR run.
#[derive(Debug)]
pub struct DrRun {
    pub trace: Trace,
    pub history: Vec<IterateSnapshot>,
    pub state: DrState,
    /// Running minimum of `||u_k - v_k||`.
    pub best_residual: f64,
}

/// Run DR until `||u - v|| < tol` or the iteration cap. On an infeasible
/// inner solve the step size is halved once; a second failure aborts with the
/// partial trace.
pub fn run_dr(
    prob: &SfLqProblem,
    params: &DrParams,
    prox_spec: &ProxSpec,
    init_s: &[f64],
) -> Result<DrRun, EngineError> {
    check_positive("eta", params.eta)?;
    check_relaxation(params.xi)?;
    if init_s.len() != prob.dims.rows() {
        return Err(EngineError::Invalid(format!(
            "initial s must have length {}, got {}",
            prob.dims.rows(),
            init_s.len()
        )));
    }
    let mut driver =
        DrDriver::new(prob, prox_spec.clone(), params.eta, params.xi, params.qp_opts.clone())?;
    let mut state = DrState::from_s(init_s.to_vec(), prob);
    let mut trace = Trace::default();
    let mut history = Vec::with_capacity(params.max_iter);
    let mut best_residual = f64::INFINITY;
    let mut retried = false;

    for k in 1..=params.max_iter {
        let started = Instant::now();
        let s_in = state.s.clone();
        let (next, prox) = match driver.step(&state) {
            Ok(out) => out,
            Err(EngineError::Qp(e)) => {
                if retried {
                    return Err(EngineError::Aborted {
                        iteration: k,
                        reason: format!("inner solve failed twice: {e}"),
                        trace: Box::new(trace),
                    });
                }
                retried = true;
                driver.halve_eta()?;
                match driver.step(&state) {
                    Ok(out) => out,
                    Err(err) => {
                        return Err(EngineError::Aborted {
                            iteration: k,
                            reason: format!("inner solve failed after halving eta: {err}"),
                            trace: Box::new(trace),
                        })
                    }
                }
            }
            Err(other) => return Err(other),
        };
        let residual = norm2(&sub_vec(&next.u, &next.v));
        best_residual = best_residual.min(residual);
        let envelope = if params.record_envelope {
            Some(envelope_from_prox(&prox, &s_in, driver.eta(), prob, prox_spec)?)
        } else {
            None
        };
        let p_tilde = next.v[prob.dims.n_star..].to_vec();
        history.push(IterateSnapshot::new(k, next.w_tilde.clone(), p_tilde.clone(), prob));
        trace.records.push(record_from_iterate(
            prob,
            k,
            residual,
            &next.w_tilde,
            &p_tilde,
            envelope,
            started.elapsed().as_secs_f64() * 1e3,
        ));
        state = next;
        // a non-finite tolerance disables early stopping
        if params.tol.is_finite() && residual < params.tol {
            break;
        }
    }
    Ok(DrRun { trace, history, state, best_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problem::{build_block_index, build_constraints, BlockPartition, SystemData};

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

    fn prob_and_spec(gamma: f64) -> (crate::problem::SfLqProblem, ProxSpec) {
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let prob = build_constraints(&shifted_example1(), &part, gamma).unwrap();
        let spec = ProxSpec::group_l0(gamma, build_block_index(&part)).unwrap();
        (prob, spec)
    }

    #[test]
    fn fixed_point_leaves_s_unchanged() {
        // if v+ == u+ then s+ == s regardless of xi
        let (prob, spec) = prob_and_spec(1.0);
        let state = DrState::from_s(vec![0.0; prob.dims.rows()], &prob);
        let next = dr_step(&state, &prob, 0.1, 0.5, &spec, &ConeQpOptions::default()).unwrap();
        let delta: Vec<f64> = next
            .s
            .iter()
            .zip(&state.s)
            .map(|(a, b)| a - b)
            .collect();
        let expected: Vec<f64> =
            next.v.iter().zip(&next.u).map(|(v, u)| 0.5 * (v - u)).collect();
        for (d, e) in delta.iter().zip(&expected) {
            assert!((d - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_relaxation() {
        let (prob, spec) = prob_and_spec(1.0);
        let params = DrParams::new(0.1, 2.5, 10, 1e-6);
        let init = vec![0.0; prob.dims.rows()];
        assert!(matches!(run_dr(&prob, &params, &spec, &init), Err(EngineError::Invalid(_))));
    }

    #[test]
    fn tol_infinite_runs_exact_iteration_count() {
        let (prob, spec) = prob_and_spec(1.0);
        let mut params = DrParams::new(0.1, 0.5, 7, f64::INFINITY);
        params.record_envelope = false;
        let init = vec![0.0; prob.dims.rows()];
        let run = run_dr(&prob, &params, &spec, &init).unwrap();
        assert_eq!(run.trace.len(), 7, "tol = inf must disable early stopping");
    }

    #[test]
    fn running_min_residual_nonincreasing() {
        let (prob, spec) = prob_and_spec(5.0);
        let mut params = DrParams::new(0.05, 0.5, 40, 0.0);
        params.record_envelope = false;
        let init = vec![0.5; prob.dims.rows()];
        let run = run_dr(&prob, &params, &spec, &init).unwrap();
        let mut running = f64::INFINITY;
        for r in &run.trace.records {
            running = running.min(r.residual_affine);
        }
        assert!((running - run.best_residual).abs() < 1e-15);
    }

    #[test]
    fn envelope_gamma_scaling_monotone() {
        let (prob, _) = prob_and_spec(1.0);
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let idx = build_block_index(&part);
        let s = vec![0.3; prob.dims.rows()];
        let opts = ConeQpOptions::tight();
        let spec1 = ProxSpec::group_l0(1.0, idx.clone()).unwrap();
        let spec2 = ProxSpec::group_l0(2.0, idx).unwrap();
        let e1 = envelope_value(&s, 0.1, &prob, &spec1, &opts).unwrap();
        let e2 = envelope_value(&s, 0.1, &prob, &spec2, &opts).unwrap();
        assert!(e2 >= e1 - 1e-10, "doubling gamma must not decrease the envelope");
    }

    #[test]
    fn envelope_reduces_to_phi1_when_flat() {
        // gamma = 0 and a stationary interior prox point with u1 = 0:
        // phi_eta(s) = phi1(u)
        let (prob, _) = prob_and_spec(0.0);
        let part = BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap();
        let spec = ProxSpec::group_l0(0.0, build_block_index(&part)).unwrap();
        let opts = ConeQpOptions::tight();
        // find the unconstrained-in-s minimum: iterate prox to a fixed point
        let mut s = vec![0.0; prob.dims.rows()];
        for _ in 0..200 {
            let r = prox_phi1(&s, 0.5, &prob, &opts).unwrap();
            s = r.u;
        }
        let prox = prox_phi1(&s, 0.5, &prob, &opts).unwrap();
        let grad_norm = norm2(&grad_phi1_from_prox(&s, &prox.u, 0.5));
        // the head coordinates of a fixed point vanish (phi2 domain)
        let env = envelope_from_prox(&prox, &s, 0.5, &prob, &spec).unwrap();
        let u1_norm = norm2(&prox.u[..prob.dims.n_star]);
        if grad_norm < 1e-4 && u1_norm < 1e-4 {
            assert!((env - prox.value).abs() < 1e-3, "env {env} vs phi1 {}", prox.value);
        }
    }
}
