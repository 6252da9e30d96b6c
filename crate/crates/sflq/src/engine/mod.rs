//! Outer iterative schemes: Douglas-Rachford splitting, direct ADMM, the
//! ADMM <-> DR correspondence, the PALM penalty baseline, and subgradient
//! descent on the DC relaxation, with trace recording and cluster-point
//! extraction.

mod admm;
mod dr;
mod palm;
mod station;
mod subgrad;
mod trace;

pub use admm::{
    admm_step, map_admm_to_dr, paper_default_init, run_admm, AdmmDriver, AdmmParams, AdmmRun,
    AdmmState, DrPoint,
};
pub use dr::{
    dr_step, dr_step_lemma_order, envelope_from_prox, envelope_value, estimate_lipschitz, run_dr,
    DrDriver, DrParams, DrRun, DrState,
};
pub use palm::{palm_run, PalmParams, PalmRun, PalmState};
pub use station::{multiplier_feasibility, stationarity_check, StationarityReport};
pub use subgrad::{subgrad_dc_run, SubgradDcParams, SubgradDcRun, SubgradDcState};
pub use trace::{extract_cluster, IterateSnapshot, Trace, TraceRecord};

use crate::cone_qp::ConeQpError;
use crate::prox::ProxError;
use std::fmt;

#[derive(Debug)]
pub enum EngineError {
    Invalid(String),
    Prox(ProxError),
    Qp(ConeQpError),
    /// The run stopped early (inner failures beyond the retry budget); the
    /// partial trace is preserved for inspection.
    Aborted { iteration: usize, reason: String, trace: Box<Trace> },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid run parameters: {m}"),
            Self::Prox(e) => write!(f, "prox step failed: {e}"),
            Self::Qp(e) => write!(f, "inner solve failed: {e}"),
            Self::Aborted { iteration, reason, .. } => {
                write!(f, "run aborted at iteration {iteration}: {reason}")
            }
        }
    }
}

impl std::error::Error for EngineError {}

impl From<ProxError> for EngineError {
    fn from(e: ProxError) -> Self {
        EngineError::Prox(e)
    }
}

impl From<ConeQpError> for EngineError {
    fn from(e: ConeQpError) -> Self {
        EngineError::Qp(e)
    }
}

impl From<crate::problem::ProblemError> for EngineError {
    fn from(e: crate::problem::ProblemError) -> Self {
        EngineError::Invalid(e.to_string())
    }
}

impl From<crate::linalg::LinAlgError> for EngineError {
    fn from(e: crate::linalg::LinAlgError) -> Self {
        EngineError::Invalid(e.to_string())
    }
}

fn check_relaxation(xi: f64) -> Result<(), EngineError> {
    if !(xi > 0.0 && xi < 2.0) {
        return Err(EngineError::Invalid(format!("xi must lie in (0, 2), got {xi}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<(), EngineError> {
    if v <= 0.0 || !v.is_finite() {
        return Err(EngineError::Invalid(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
