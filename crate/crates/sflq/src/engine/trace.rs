//! Per-iteration trace records and cluster-point extraction.

use crate::problem::SfLqProblem;

/// Numerical-zero tolerance used for the group count column.
pub(crate) const TRACE_PI_TOL: f64 = 1e-6;

/// One outer-iteration record.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    /// `||u_k - v_k||` for DR, `||A w~ + B p~||` for the coupled solvers.
    pub residual_affine: f64,
    /// Cone infeasibility of the current `W` iterate.
    pub residual_cone: f64,
    /// Objective `<vec(R), w~>`.
    pub objective: f64,
    /// `W[1][3]` and `W[2][3]` (one-based), the monitored entries.
    pub w13: f64,
    pub w23: f64,
    /// `||P - W2^T||`.
    pub p_minus_w2: f64,
    /// Group count of the sparse iterate.
    pub group_l0: usize,
    /// DR envelope at the step's input point, when the scheme provides one.
    pub envelope: Option<f64>,
    /// Wall time of the step in milliseconds (excluded from deterministic
    /// outputs by default).
    pub wall_ms: f64,
}

/// Append-only run trace; one record per executed outer iteration.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Max minus min of a column over the trailing fraction of the run.
    pub fn trailing_amplitude(&self, frac: f64, col: impl Fn(&TraceRecord) -> f64) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let start = ((self.records.len() as f64) * (1.0 - frac)).floor() as usize;
        let tail = &self.records[start.min(self.records.len() - 1)..];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in tail {
            let v = col(r);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// (min, max) of a column over the trailing fraction of the run.
    pub fn trailing_range(&self, frac: f64, col: impl Fn(&TraceRecord) -> f64) -> (f64, f64) {
        if self.records.is_empty() {
            return (0.0, 0.0);
        }
        let start = ((self.records.len() as f64) * (1.0 - frac)).floor() as usize;
        let tail = &self.records[start.min(self.records.len() - 1)..];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in tail {
            let v = col(r);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Stored iterate for subsequence selection.
#[derive(Debug, Clone)]
pub struct IterateSnapshot {
    pub iter: usize,
    pub w_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    /// Feasibility score `||A w~ + B p~|| + cone violation` (lower is better).
    pub score: f64,
}

impl IterateSnapshot {
    pub fn new(
        iter: usize,
        w_tilde: Vec<f64>,
        p_tilde: Vec<f64>,
        prob: &SfLqProblem,
    ) -> Self {
        let affine = super::norm2(&prob.affine_residual(&w_tilde, &p_tilde));
        let cone = prob.cone_violation(&w_tilde).unwrap_or(f64::INFINITY);
        Self { iter, w_tilde, p_tilde, score: affine + cone }
    }
}

/// Pick the best-feasibility iterate from the trailing `window` snapshots.
/// Ties keep the earliest candidate; `window = 1` returns the last iterate.
pub fn extract_cluster(history: &[IterateSnapshot], window: usize) -> Option<&IterateSnapshot> {
    if history.is_empty() {
        return None;
    }
    let window = window.max(1).min(history.len());
    let tail = &history[history.len() - window..];
    let mut best = &tail[0];
    for snap in &tail[1..] {
        if snap.score < best.score {
            best = snap;
        }
    }
    Some(best)
}

/// Shared helper: build a trace record from the current coupled iterate.
pub(crate) fn record_from_iterate(
    prob: &SfLqProblem,
    iter: usize,
    residual_affine: f64,
    w_tilde: &[f64],
    p_tilde: &[f64],
    envelope: Option<f64>,
    wall_ms: f64,
) -> TraceRecord {
    let p = prob.dims.p;
    let (w13, w23) = if p >= 3 {
        (w_tilde[2 * p], w_tilde[2 * p + 1])
    } else {
        (0.0, 0.0)
    };
    let w2t_vec = &prob.apply_a(w_tilde)[prob.dims.n_star..];
    let p_minus_w2 = super::norm2(&super::sub_vec(p_tilde, w2t_vec));
    TraceRecord {
        iter,
        residual_affine,
        residual_cone: prob.cone_violation(w_tilde).unwrap_or(f64::NAN),
        objective: prob.lq_objective(w_tilde),
        w13,
        w23,
        p_minus_w2,
        group_l0: crate::problem::group_l0_count(p_tilde, &prob.block_index, TRACE_PI_TOL),
        envelope,
        wall_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(iter: usize, score: f64) -> IterateSnapshot {
        IterateSnapshot { iter, w_tilde: vec![0.0], p_tilde: vec![0.0], score }
    }

    #[test]
    fn monotone_history_returns_final() {
        let hist: Vec<_> = (0..10).map(|k| snap(k, 10.0 - k as f64)).collect();
        let best = extract_cluster(&hist, 5).unwrap();
        assert_eq!(best.iter, 9);
    }

    #[test]
    fn window_one_returns_last_regardless() {
        let hist = vec![snap(0, 0.1), snap(1, 5.0)];
        assert_eq!(extract_cluster(&hist, 1).unwrap().iter, 1);
    }

    #[test]
    fn empty_history_is_none() {
        assert!(extract_cluster(&[], 10).is_none());
    }

    #[test]
    fn picks_min_score_in_window() {
        let hist = vec![snap(0, 0.01), snap(1, 3.0), snap(2, 0.5), snap(3, 2.0)];
        // window of 3 excludes the global best at iter 0
        assert_eq!(extract_cluster(&hist, 3).unwrap().iter, 2);
    }

    #[test]
    fn trailing_amplitude_on_constant_tail() {
        let mut trace = Trace::default();
        for k in 0..10 {
            trace.records.push(TraceRecord {
                iter: k,
                residual_affine: if k < 5 { 100.0 } else { 1.0 },
                residual_cone: 0.0,
                objective: 0.0,
                w13: 0.0,
                w23: 0.0,
                p_minus_w2: 0.0,
                group_l0: 0,
                envelope: None,
                wall_ms: 0.0,
            });
        }
        let amp = trace.trailing_amplitude(0.5, |r| r.residual_affine);
        assert_eq!(amp, 0.0);
    }
}
