//! Deterministic CSV trace and plain-text report rendering.
//!
//! Floats are printed in scientific notation with 17 significant digits,
//! which round-trips f64 exactly; identical runs therefore produce
//! byte-identical artifacts. Wall-clock columns are excluded unless
//! explicitly requested.

use crate::config::{RunConfig, TraceColumn};
use sflq::engine::{Trace, TraceRecord};
use sflq::linalg::DenseMatrix;
use sflq::recovery::{Controller, CostBreakdown};

/// 17-significant-digit scientific formatting (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn trace_csv(trace: &Trace, columns: &[TraceColumn]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = columns.iter().map(|c| c.name()).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for rec in &trace.records {
        let mut fields = Vec::with_capacity(columns.len());
        for col in columns {
            fields.push(render_column(rec, *col));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn render_column(rec: &TraceRecord, col: TraceColumn) -> String {
    match col {
        TraceColumn::Iter => rec.iter.to_string(),
        TraceColumn::ResidualAffine => fmt_f64(rec.residual_affine),
        TraceColumn::ResidualCone => fmt_f64(rec.residual_cone),
        TraceColumn::Obj => fmt_f64(rec.objective),
        TraceColumn::W13 => fmt_f64(rec.w13),
        TraceColumn::W23 => fmt_f64(rec.w23),
        TraceColumn::PMinusW2 => fmt_f64(rec.p_minus_w2),
        TraceColumn::GroupL0 => rec.group_l0.to_string(),
        TraceColumn::Envelope => rec.envelope.map(fmt_f64).unwrap_or_default(),
        TraceColumn::WallMs => fmt_f64(rec.wall_ms),
    }
}

fn matrix_literal(m: &DenseMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let cols: Vec<String> = (0..m.cols()).map(|j| fmt_f64(m.get(i, j))).collect();
            format!("[{}]", cols.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Controller section of the report, or the recovery failure.
pub enum ControllerOutcome {
    Recovered { controller: Controller, costs: CostBreakdown },
    Failed(String),
}

pub struct ReportInputs<'a> {
    pub config: &'a RunConfig,
    pub config_name: &'a str,
    pub iterations: usize,
    pub final_residual: f64,
    pub best_residual: f64,
    pub extracted_iter: Option<usize>,
    pub extracted_score: Option<f64>,
    pub extracted_objective: Option<f64>,
    pub extracted_group_l0: Option<usize>,
    pub controller: Option<ControllerOutcome>,
    pub assumption_lines: Vec<String>,
    /// Wall time, included only when timing output was requested.
    pub wall_ms: Option<f64>,
    /// Run failure note (partial traces still get a report).
    pub failure: Option<String>,
}

pub fn render_report(inp: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    let cfg = inp.config;
    fn kv_line(out: &mut String, k: &str, v: String) {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    macro_rules! kv {
        ($k:expr, $v:expr $(,)?) => {
            kv_line(&mut out, $k, $v)
        };
    }
    kv!("config", inp.config_name.to_string());
    kv!("solver", cfg.solver.name().to_string());
    kv!(
        "penalty",
        match cfg.penalty {
            sflq::prox::ProxKind::GroupL0 => "group_l0",
            sflq::prox::ProxKind::GroupL1 => "group_l1",
            sflq::prox::ProxKind::DcEnvelope => "dc_envelope",
        }
        .to_string(),
    );
    kv!("gamma", fmt_f64(cfg.params.gamma));
    match cfg.solver {
        crate::config::SolverKind::Admm => {
            kv!("beta", fmt_f64(cfg.params.beta));
            kv!("xi", fmt_f64(cfg.params.xi));
        }
        crate::config::SolverKind::Dr => {
            kv!("eta", fmt_f64(cfg.params.eta));
            kv!("xi", fmt_f64(cfg.params.xi));
        }
        crate::config::SolverKind::Palm => {
            kv!("sigma", fmt_f64(cfg.params.sigma));
            kv!("beta", fmt_f64(cfg.params.beta));
            kv!("tau", fmt_f64(cfg.params.tau));
            kv!("mu", fmt_f64(cfg.params.mu));
            kv!("rho", fmt_f64(cfg.params.rho));
        }
        crate::config::SolverKind::SubgradDc => {
            kv!("alpha", fmt_f64(cfg.params.alpha));
            kv!("alpha0", fmt_f64(cfg.params.alpha0));
            kv!("eta_sm", fmt_f64(cfg.params.eta_sm));
        }
    }
    kv!("max_iter", cfg.params.max_iter.to_string());
    kv!("seed", cfg.seed.to_string());
    kv!("iterations", inp.iterations.to_string());
    kv!("final_residual", fmt_f64(inp.final_residual));
    kv!("best_residual", fmt_f64(inp.best_residual));
    if let Some(it) = inp.extracted_iter {
        kv!("extracted_iter", it.to_string());
    }
    if let Some(s) = inp.extracted_score {
        kv!("extracted_score", fmt_f64(s));
    }
    if let Some(o) = inp.extracted_objective {
        kv!("extracted_objective", fmt_f64(o));
    }
    if let Some(c) = inp.extracted_group_l0 {
        kv!("extracted_group_l0", c.to_string());
    }
    match &inp.controller {
        Some(ControllerOutcome::Recovered { controller, costs }) => {
            kv!("K", matrix_literal(&controller.k));
            kv!(
                "pattern",
                format!(
                    "[{}]",
                    controller
                        .pattern
                        .iter()
                        .map(|&b| if b { "1" } else { "0" })
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            );
            kv!("stability_margin", fmt_f64(controller.stability_margin));
            kv!("w1_min_eig", fmt_f64(controller.w1_min_eig));
            kv!("lq_cost_gramian", fmt_f64(costs.gramian));
            kv!("lq_cost_r_inner", fmt_f64(costs.r_inner));
            kv!("lq_cost_w11", fmt_f64(costs.w11));
        }
        Some(ControllerOutcome::Failed(msg)) => {
            kv!("controller_recovery", format!("failed: {msg}"));
        }
        None => {}
    }
    for line in &inp.assumption_lines {
        out.push_str(line);
        out.push('\n');
    }
    if let Some(ms) = inp.wall_ms {
        kv!("wall_ms", format!("{ms:.3}"));
    }
    if let Some(f) = &inp.failure {
        kv!("run_failure", f.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[1.0, -0.5, 1.0 / 3.0, 6.346, 1e-300, std::f64::consts::PI] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s} did not round-trip");
        }
    }

    #[test]
    fn csv_row_count_matches_trace() {
        let mut trace = Trace::default();
        for k in 1..=3 {
            trace.records.push(TraceRecord {
                iter: k,
                residual_affine: k as f64,
                residual_cone: 0.0,
                objective: 1.0,
                w13: 0.0,
                w23: 0.0,
                p_minus_w2: 0.0,
                group_l0: 2,
                envelope: None,
                wall_ms: 0.1,
            });
        }
        let csv = trace_csv(&trace, &TraceColumn::default_set());
        assert_eq!(csv.lines().count(), 4); // header + 3 rows
        assert!(csv.starts_with("iter,residual_affine,"));
    }
}
