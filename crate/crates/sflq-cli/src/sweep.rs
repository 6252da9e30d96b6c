//! Parameter sweep harness: one run per value, summarized as a CSV table.

use crate::config::RunConfig;
use crate::report::fmt_f64;
use crate::runner::{run_command, RunSummary};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    Gamma,
    Xi,
}

impl SweepParam {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "beta" => Some(Self::Beta),
            "gamma" => Some(Self::Gamma),
            "xi" => Some(Self::Xi),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Gamma => "gamma",
            Self::Xi => "xi",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<RunSummary, String>,
}

/// Run the config once per parameter value. Individual failures become rows;
/// the sweep continues.
pub fn sweep_command(base: &RunConfig, param: SweepParam, values: &[f64]) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&value| {
            let mut cfg = base.clone();
            match param {
                SweepParam::Beta => cfg.params.beta = value,
                SweepParam::Gamma => cfg.params.gamma = value,
                SweepParam::Xi => cfg.params.xi = value,
            }
            let outcome = run_command(&cfg, "sweep", false)
                .map(|art| art.summary)
                .map_err(|e| e.to_string());
            SweepRow { value, outcome }
        })
        .collect()
}

/// Summary table: one CSV row per swept value.
pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{},status,iterations,final_residual,amplitude_pmw2,extracted_group_l0,stability_margin,lq_cost\n",
        param.name()
    ));
    for row in rows {
        match &row.outcome {
            Ok(s) => {
                out.push_str(&format!(
                    "{},ok,{},{},{},{},{},{}\n",
                    fmt_f64(row.value),
                    s.iterations,
                    fmt_f64(s.final_residual),
                    fmt_f64(s.amplitude_pmw2),
                    s.extracted_group_l0.map(|c| c.to_string()).unwrap_or_default(),
                    s.stability_margin.map(fmt_f64).unwrap_or_default(),
                    s.lq_cost.map(fmt_f64).unwrap_or_default(),
                ));
            }
            Err(e) => {
                out.push_str(&format!(
                    "{},error,,,,,,\"{}\"\n",
                    fmt_f64(row.value),
                    e.replace('"', "'").replace('\n', " ")
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::fixtures;

    #[test]
    fn single_value_sweep_matches_run() {
        let text = fixtures::EXAMPLE1_ADMM_CFG.replace("max_iter = 2000", "max_iter = 30");
        let cfg = parse_config(&text).unwrap();
        let rows = sweep_command(&cfg, SweepParam::Beta, &[10.0]);
        assert_eq!(rows.len(), 1);
        let direct = run_command(&cfg, "x", false).unwrap();
        let swept = rows[0].outcome.as_ref().unwrap();
        assert_eq!(swept.iterations, direct.summary.iterations);
        assert_eq!(swept.final_residual, direct.summary.final_residual);
    }

    #[test]
    fn failures_become_rows() {
        let text = fixtures::EXAMPLE1_ADMM_CFG.replace("max_iter = 2000", "max_iter = 10");
        let cfg = parse_config(&text).unwrap();
        // xi outside (0,2) fails that run but not the sweep
        let rows = sweep_command(&cfg, SweepParam::Xi, &[0.5, 5.0]);
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        let csv = sweep_csv(SweepParam::Xi, &rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains(",error,"));
    }
}
