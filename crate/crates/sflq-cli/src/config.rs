//! Sectioned key-value run configuration with line-precise error reporting.
//!
//! Grammar: `[section]` headers, `key = value` entries, `#` comments. Values
//! are numbers, bare identifiers, vectors `[1, 2]`, or matrices
//! `[[1, 2], [3, 4]]`; a value may continue onto following lines while its
//! brackets remain unbalanced. Parsing collects every error instead of
//! stopping at the first one.

use sflq::linalg::DenseMatrix;
use sflq::problem::{BlockPartition, SystemData};
use sflq::prox::ProxKind;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Admm,
    Dr,
    Palm,
    SubgradDc,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Admm => "admm",
            Self::Dr => "dr",
            Self::Palm => "palm",
            Self::SubgradDc => "subgrad_dc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    PaperDefault,
    Zeros,
    Custom { w: Vec<f64>, p: Vec<f64>, lambda: Vec<f64> },
}

/// Solver parameters; only the fields of the selected solver are required.
#[derive(Debug, Clone)]
pub struct SolverParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub xi: f64,
    pub sigma: f64,
    pub tau: f64,
    pub mu: f64,
    pub rho: f64,
    pub alpha0: f64,
    pub eta_sm: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemData,
    pub partition: BlockPartition,
    pub solver: SolverKind,
    pub penalty: ProxKind,
    pub params: SolverParams,
    pub init: InitKind,
    pub seed: u64,
    /// Cluster-extraction window (iterations).
    pub window: usize,
    pub pattern_tol: f64,
    pub trace_columns: Vec<TraceColumn>,
}

/// Trace CSV columns in their fixed emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceColumn {
    Iter,
    ResidualAffine,
    ResidualCone,
    Obj,
    W13,
    W23,
    PMinusW2,
    GroupL0,
    Envelope,
    WallMs,
}

impl TraceColumn {
    pub const ALL: [TraceColumn; 10] = [
        TraceColumn::Iter,
        TraceColumn::ResidualAffine,
        TraceColumn::ResidualCone,
        TraceColumn::Obj,
        TraceColumn::W13,
        TraceColumn::W23,
        TraceColumn::PMinusW2,
        TraceColumn::GroupL0,
        TraceColumn::Envelope,
        TraceColumn::WallMs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Iter => "iter",
            Self::ResidualAffine => "residual_affine",
            Self::ResidualCone => "residual_cone",
            Self::Obj => "obj",
            Self::W13 => "W13",
            Self::W23 => "W23",
            Self::PMinusW2 => "PminusW2",
            Self::GroupL0 => "group_l0",
            Self::Envelope => "envelope",
            Self::WallMs => "wall_ms",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Byte-deterministic default set (no wall time).
    pub fn default_set() -> Vec<Self> {
        vec![
            Self::Iter,
            Self::ResidualAffine,
            Self::ResidualCone,
            Self::Obj,
            Self::W13,
            Self::W23,
            Self::PMinusW2,
            Self::GroupL0,
        ]
    }
}

#[derive(Debug, Clone)]
enum Value {
    Number(f64),
    Word(String),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

struct RawEntry {
    line: usize,
    value: Value,
    used: std::cell::Cell<bool>,
}

struct Sections {
    // section -> key -> entry
    map: BTreeMap<String, BTreeMap<String, RawEntry>>,
    order: Vec<String>,
}

/// Parse the documented key-value format into a validated [`RunConfig`],
/// or the full list of errors.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let sections = tokenize(text, &mut errors);

    let mut need = |name: &str| {
        if !sections.map.contains_key(name) {
            errors.push(ConfigError {
                line: 0,
                message: format!("missing required section [{name}]"),
            });
        }
    };
    need("system");
    need("partition");
    need("solver");

    if !errors.is_empty() && sections.map.is_empty() {
        return Err(errors);
    }

    let system = build_system(&sections, &mut errors);
    let partition = build_partition(&sections, &mut errors);
    let (solver, penalty, params, init, seed, window, pattern_tol) =
        build_solver(&sections, &mut errors);
    let trace_columns = build_trace(&sections, &mut errors);

    // flag unknown keys
    for (sec, keys) in &sections.map {
        for (key, entry) in keys {
            if !entry.used.get() {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("unknown key `{key}` in section [{sec}]"),
                });
            }
        }
    }

    match (system, partition) {
        (Some(system), Some(partition)) if errors.is_empty() => {
            // cross-validation: partition must match plant dims
            if partition.n() != system.state_dim() || partition.m() != system.input_dim() {
                return Err(vec![ConfigError {
                    line: 0,
                    message: format!(
                        "partition sums ({} x {}) do not match plant dimensions ({} x {})",
                        partition.m(),
                        partition.n(),
                        system.input_dim(),
                        system.state_dim()
                    ),
                }]);
            }
            Ok(RunConfig {
                system,
                partition,
                solver,
                penalty,
                params,
                init,
                seed,
                window,
                pattern_tol,
                trace_columns,
            })
        }
        _ => Err(errors),
    }
}

fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> Sections {
    let mut map: BTreeMap<String, BTreeMap<String, RawEntry>> = BTreeMap::new();
    let mut order = Vec::new();
    let mut current = String::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let stripped = strip_comment(raw).trim().to_string();
        if stripped.is_empty() {
            continue;
        }
        if stripped.starts_with('[') {
            if !stripped.ends_with(']') {
                errors.push(ConfigError {
                    line: line_no,
                    message: "malformed section header".into(),
                });
                continue;
            }
            current = stripped[1..stripped.len() - 1].trim().to_lowercase();
            if current.is_empty() {
                errors.push(ConfigError { line: line_no, message: "empty section name".into() });
            } else if !map.contains_key(&current) {
                map.insert(current.clone(), BTreeMap::new());
                order.push(current.clone());
            }
            continue;
        }
        let Some(eq) = stripped.find('=') else {
            errors.push(ConfigError {
                line: line_no,
                message: format!("expected `key = value`, got `{stripped}`"),
            });
            continue;
        };
        let key = stripped[..eq].trim().to_lowercase();
        let mut value_text = stripped[eq + 1..].trim().to_string();
        // bracket-balance continuation across lines
        while bracket_balance(&value_text) > 0 {
            match lines.next() {
                Some((_, cont)) => {
                    value_text.push(' ');
                    value_text.push_str(strip_comment(cont).trim());
                }
                None => break,
            }
        }
        if current.is_empty() {
            errors.push(ConfigError {
                line: line_no,
                message: format!("key `{key}` appears before any [section]"),
            });
            continue;
        }
        match parse_value(&value_text) {
            Ok(value) => {
                map.get_mut(&current).unwrap().insert(
                    key,
                    RawEntry { line: line_no, value, used: std::cell::Cell::new(false) },
                );
            }
            Err(msg) => errors.push(ConfigError { line: line_no, message: msg }),
        }
    }
    Sections { map, order }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn bracket_balance(s: &str) -> i64 {
    s.chars().fold(0, |acc, c| match c {
        '[' => acc + 1,
        ']' => acc - 1,
        _ => acc,
    })
}

fn parse_value(text: &str) -> Result<Value, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty value".into());
    }
    if t.starts_with("[[") {
        let rows = split_rows(t)?;
        let mut matrix = Vec::new();
        for row in rows {
            matrix.push(parse_number_list(&row)?);
        }
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".into());
        }
        return Ok(Value::Matrix(matrix));
    }
    if t.starts_with('[') {
        if !t.ends_with(']') {
            return Err("unterminated vector".into());
        }
        return Ok(Value::Vector(parse_number_list(&t[1..t.len() - 1])?));
    }
    if let Ok(n) = t.parse::<f64>() {
        return Ok(Value::Number(n));
    }
    if t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ',') {
        return Ok(Value::Word(t.to_string()));
    }
    Err(format!("cannot parse value `{t}`"))
}

/// Split `[[a, b], [c, d]]` into row strings `a, b` and `c, d`.
fn split_rows(t: &str) -> Result<Vec<String>, String> {
    let inner = t
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or("unterminated matrix")?;
    let mut rows = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '[' => {
                depth += 1;
                if depth == 1 {
                    cur.clear();
                    continue;
                }
            }
            ']' => {
                depth -= 1;
                if depth == 0 {
                    rows.push(cur.clone());
                    continue;
                }
                if depth < 0 {
                    return Err("unbalanced brackets".into());
                }
            }
            _ => {}
        }
        if depth >= 1 {
            cur.push(c);
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    Ok(rows)
}

fn parse_number_list(row: &str) -> Result<Vec<f64>, String> {
    row.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect()
}

struct SectionView<'a> {
    sections: &'a Sections,
    name: &'a str,
}

impl<'a> SectionView<'a> {
    fn entry(&self, key: &str) -> Option<&'a RawEntry> {
        let e = self.sections.map.get(self.name)?.get(key)?;
        e.used.set(true);
        Some(e)
    }

    fn matrix(&self, key: &str, errors: &mut Vec<ConfigError>) -> Option<DenseMatrix> {
        let entry = self.entry(key)?;
        match &entry.value {
            Value::Matrix(rows) => match DenseMatrix::from_rows(rows) {
                Ok(m) => Some(m),
                Err(e) => {
                    errors.push(ConfigError { line: entry.line, message: e.to_string() });
                    None
                }
            },
            Value::Vector(v) => {
                DenseMatrix::from_row_slice(1, v.len(), v)
                    .map_err(|e| {
                        errors.push(ConfigError { line: entry.line, message: e.to_string() })
                    })
                    .ok()
            }
            _ => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("`{key}` must be a matrix"),
                });
                None
            }
        }
    }

    fn number(&self, key: &str, errors: &mut Vec<ConfigError>) -> Option<f64> {
        let entry = self.entry(key)?;
        match entry.value {
            Value::Number(n) => Some(n),
            _ => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("`{key}` must be a number"),
                });
                None
            }
        }
    }

    fn usize_list(&self, key: &str, errors: &mut Vec<ConfigError>) -> Option<Vec<usize>> {
        let entry = self.entry(key)?;
        match &entry.value {
            Value::Vector(v) => {
                let mut out = Vec::with_capacity(v.len());
                for x in v {
                    if x.fract() != 0.0 || *x < 0.0 {
                        errors.push(ConfigError {
                            line: entry.line,
                            message: format!("`{key}` entries must be nonnegative integers"),
                        });
                        return None;
                    }
                    out.push(*x as usize);
                }
                Some(out)
            }
            _ => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("`{key}` must be a vector of integers"),
                });
                None
            }
        }
    }

    fn vector(&self, key: &str, errors: &mut Vec<ConfigError>) -> Option<Vec<f64>> {
        let entry = self.entry(key)?;
        match &entry.value {
            Value::Vector(v) => Some(v.clone()),
            _ => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("`{key}` must be a vector"),
                });
                None
            }
        }
    }

    fn word(&self, key: &str, errors: &mut Vec<ConfigError>) -> Option<String> {
        let entry = self.entry(key)?;
        match &entry.value {
            Value::Word(w) => Some(w.clone()),
            _ => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!("`{key}` must be an identifier"),
                });
                None
            }
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.sections
            .map
            .get(self.name)
            .and_then(|m| m.get(key))
            .map(|e| e.line)
            .unwrap_or(0)
    }
}

fn build_system(sections: &Sections, errors: &mut Vec<ConfigError>) -> Option<SystemData> {
    if !sections.map.contains_key("system") {
        return None;
    }
    let view = SectionView { sections, name: "system" };
    let a = view.matrix("a", errors);
    let b2 = view.matrix("b2", errors);
    let b1 = view.matrix("b1", errors);
    let c = view.matrix("c", errors);
    let d = view.matrix("d", errors);
    let (a, b2, b1, c, d) = (a?, b2?, b1?, c?, d?);

    // optional uncertainty vertices: sections [vertex2], [vertex3], ...
    let mut vertices = vec![(a.clone(), b2.clone())];
    for sec in &sections.order {
        if let Some(idx) = sec.strip_prefix("vertex") {
            if idx.parse::<usize>().is_ok() {
                let vv = SectionView { sections, name: sec };
                let va = vv.matrix("a", errors);
                let vb = vv.matrix("b2", errors);
                if let (Some(va), Some(vb)) = (va, vb) {
                    vertices.push((va, vb));
                }
            }
        }
    }

    match SystemData::with_vertices(a, b2, b1, c, d, vertices) {
        Ok(sys) => Some(sys),
        Err(e) => {
            errors.push(ConfigError { line: view.line_of("a"), message: e.to_string() });
            None
        }
    }
}

fn build_partition(sections: &Sections, errors: &mut Vec<ConfigError>) -> Option<BlockPartition> {
    if !sections.map.contains_key("partition") {
        return None;
    }
    let view = SectionView { sections, name: "partition" };
    let rows = view.usize_list("row_sizes", errors);
    let cols = view.usize_list("col_sizes", errors);
    match (rows, cols) {
        (Some(rows), Some(cols)) => match BlockPartition::new(rows, cols) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(ConfigError {
                    line: view.line_of("row_sizes"),
                    message: e.to_string(),
                });
                None
            }
        },
        _ => {
            if sections.map.get("partition").map_or(true, |m| !m.contains_key("row_sizes")) {
                errors.push(ConfigError {
                    line: 0,
                    message: "[partition] requires `row_sizes`".into(),
                });
            }
            if sections.map.get("partition").map_or(true, |m| !m.contains_key("col_sizes")) {
                errors.push(ConfigError {
                    line: 0,
                    message: "[partition] requires `col_sizes`".into(),
                });
            }
            None
        }
    }
}

#[allow(clippy::type_complexity)]
fn build_solver(
    sections: &Sections,
    errors: &mut Vec<ConfigError>,
) -> (SolverKind, ProxKind, SolverParams, InitKind, u64, usize, f64) {
    let mut params = SolverParams {
        gamma: f64::NAN,
        alpha: 1.0,
        beta: f64::NAN,
        eta: f64::NAN,
        xi: 0.5,
        sigma: 1.0,
        tau: f64::NAN,
        mu: f64::NAN,
        rho: f64::NAN,
        alpha0: 0.3,
        eta_sm: 0.05,
        max_iter: 1000,
        tol: 1e-9,
    };
    let mut solver = SolverKind::Admm;
    let mut penalty = ProxKind::GroupL0;
    let mut init = InitKind::PaperDefault;
    let mut seed = 0u64;
    let mut window = 200usize;
    let mut pattern_tol = 1e-3;

    if !sections.map.contains_key("solver") {
        return (solver, penalty, params, init, seed, window, pattern_tol);
    }
    let view = SectionView { sections, name: "solver" };

    if let Some(kind) = view.word("kind", errors) {
        solver = match kind.as_str() {
            "admm" => SolverKind::Admm,
            "dr" => SolverKind::Dr,
            "palm" => SolverKind::Palm,
            "subgrad_dc" => SolverKind::SubgradDc,
            other => {
                errors.push(ConfigError {
                    line: view.line_of("kind"),
                    message: format!(
                        "unknown solver `{other}` (expected admm, dr, palm, or subgrad_dc)"
                    ),
                });
                SolverKind::Admm
            }
        };
    } else {
        errors.push(ConfigError { line: 0, message: "[solver] requires `kind`".into() });
    }

    if let Some(p) = view.word("penalty", errors) {
        penalty = match p.as_str() {
            "group_l0" => ProxKind::GroupL0,
            "group_l1" => ProxKind::GroupL1,
            "dc_envelope" => ProxKind::DcEnvelope,
            other => {
                errors.push(ConfigError {
                    line: view.line_of("penalty"),
                    message: format!(
                        "unknown penalty `{other}` (expected group_l0, group_l1, or dc_envelope)"
                    ),
                });
                ProxKind::GroupL0
            }
        };
    }

    macro_rules! opt_num {
        ($field:ident, $key:expr) => {
            if let Some(v) = view.number($key, errors) {
                params.$field = v;
            }
        };
    }
    opt_num!(gamma, "gamma");
    opt_num!(alpha, "alpha");
    opt_num!(beta, "beta");
    opt_num!(eta, "eta");
    opt_num!(xi, "xi");
    opt_num!(sigma, "sigma");
    opt_num!(tau, "tau");
    opt_num!(mu, "mu");
    opt_num!(rho, "rho");
    opt_num!(alpha0, "alpha0");
    opt_num!(eta_sm, "eta_sm");
    opt_num!(tol, "tol");
    if let Some(v) = view.number("max_iter", errors) {
        if v.fract() == 0.0 && v >= 0.0 {
            params.max_iter = v as usize;
        } else {
            errors.push(ConfigError {
                line: view.line_of("max_iter"),
                message: "`max_iter` must be a nonnegative integer".into(),
            });
        }
    }
    if let Some(v) = view.number("seed", errors) {
        if v.fract() == 0.0 && v >= 0.0 {
            seed = v as u64;
        } else {
            errors.push(ConfigError {
                line: view.line_of("seed"),
                message: "`seed` must be a nonnegative integer".into(),
            });
        }
    }
    if let Some(v) = view.number("window", errors) {
        if v.fract() == 0.0 && v >= 1.0 {
            window = v as usize;
        } else {
            errors.push(ConfigError {
                line: view.line_of("window"),
                message: "`window` must be a positive integer".into(),
            });
        }
    }
    opt_num!(tol, "tol");
    if let Some(v) = view.number("pattern_tol", errors) {
        pattern_tol = v;
    }

    if let Some(w) = view.word("init", errors) {
        init = match w.as_str() {
            "paper_default" => InitKind::PaperDefault,
            "zeros" => InitKind::Zeros,
            "custom" => {
                let wv = view.vector("init_w", errors).unwrap_or_default();
                let pv = view.vector("init_p", errors).unwrap_or_default();
                let lv = view.vector("init_lambda", errors).unwrap_or_default();
                InitKind::Custom { w: wv, p: pv, lambda: lv }
            }
            other => {
                errors.push(ConfigError {
                    line: view.line_of("init"),
                    message: format!(
                        "unknown init `{other}` (expected paper_default, zeros, or custom)"
                    ),
                });
                InitKind::PaperDefault
            }
        };
    }

    // per-solver required parameters
    let require = |key: &str, val: f64, errors: &mut Vec<ConfigError>| {
        if val.is_nan() {
            errors.push(ConfigError {
                line: 0,
                message: format!("solver `{}` requires `{key}`", solver.name()),
            });
        }
    };
    if view.entry("gamma").is_none() {
        errors.push(ConfigError { line: 0, message: "[solver] requires `gamma`".into() });
    }
    match solver {
        SolverKind::Admm => require("beta", params.beta, errors),
        SolverKind::Dr => require("eta", params.eta, errors),
        SolverKind::Palm => {
            require("beta", params.beta, errors);
            require("tau", params.tau, errors);
            require("mu", params.mu, errors);
            require("rho", params.rho, errors);
        }
        SolverKind::SubgradDc => {}
    }

    (solver, penalty, params, init, seed, window, pattern_tol)
}

fn build_trace(sections: &Sections, errors: &mut Vec<ConfigError>) -> Vec<TraceColumn> {
    if !sections.map.contains_key("trace") {
        return TraceColumn::default_set();
    }
    let view = SectionView { sections, name: "trace" };
    match view.word("columns", errors) {
        Some(spec) => {
            let mut cols = Vec::new();
            for name in spec.split(',').filter(|s| !s.is_empty()) {
                match TraceColumn::from_name(name) {
                    Some(c) => cols.push(c),
                    None => errors.push(ConfigError {
                        line: view.line_of("columns"),
                        message: format!("unknown trace column `{name}`"),
                    }),
                }
            }
            if cols.is_empty() {
                TraceColumn::default_set()
            } else {
                // emit in canonical order regardless of listing order
                TraceColumn::ALL.iter().copied().filter(|c| cols.contains(c)).collect()
            }
        }
        None => TraceColumn::default_set(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bundled_example1_parses() {
        let cfg = parse_config(fixtures::EXAMPLE1_ADMM_CFG).expect("bundled config must parse");
        assert_eq!(cfg.solver, SolverKind::Admm);
        assert_eq!(cfg.params.beta, 10.0);
        assert_eq!(cfg.params.xi, 0.5);
        assert_eq!(cfg.system.state_dim(), 3);
        assert_eq!(cfg.system.input_dim(), 2);
        assert_eq!(cfg.system.a.get(0, 1), 1.0);
        assert_eq!(cfg.system.b2.get(0, 0), 0.9315);
        assert_eq!(cfg.partition.col_sizes, vec![2, 1]);
        assert_eq!(cfg.init, InitKind::PaperDefault);
    }

    #[test]
    fn empty_file_lists_required_sections() {
        let errs = parse_config("").unwrap_err();
        let text: Vec<String> = errs.iter().map(|e| e.message.clone()).collect();
        assert!(text.iter().any(|m| m.contains("[system]")));
        assert!(text.iter().any(|m| m.contains("[partition]")));
        assert!(text.iter().any(|m| m.contains("[solver]")));
    }

    #[test]
    fn ragged_matrix_reports_line() {
        let text = "[system]\nA = [[1, 2], [3]]\n";
        let errs = parse_config(text).unwrap_err();
        assert!(errs.iter().any(|e| e.line == 2 && e.message.contains("ragged")));
    }

    #[test]
    fn unknown_keys_are_flagged() {
        let mut text = fixtures::EXAMPLE1_ADMM_CFG.to_string();
        text.push_str("\n[solver]\nbogus_key = 1\n");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("bogus_key")));
    }

    #[test]
    fn missing_solver_params_reported() {
        let text = "\
[system]
A = [[0]]
B2 = [[1]]
B1 = [[1]]
C = [[1]]
D = [[0]]
[partition]
row_sizes = [1]
col_sizes = [1]
[solver]
kind = palm
gamma = 1
";
        let errs = parse_config(text).unwrap_err();
        let msgs: Vec<&str> = errs.iter().map(|e| e.message.as_str()).collect();
        assert!(msgs.iter().any(|m| m.contains("`beta`")));
        assert!(msgs.iter().any(|m| m.contains("`tau`")));
        assert!(msgs.iter().any(|m| m.contains("`mu`")));
        assert!(msgs.iter().any(|m| m.contains("`rho`")));
    }

    #[test]
    fn multiline_matrix_continuation() {
        let text = "\
[system]
A = [[0, 1],
     [0, 0]]
B2 = [[1], [1]]
B1 = [[1, 0], [0, 1]]
C = [[1, 0], [0, 1]]
D = [[0], [0]]
[partition]
row_sizes = [1]
col_sizes = [1, 1]
[solver]
kind = admm
beta = 10
gamma = 1
";
        let cfg = parse_config(text).expect("continuation must parse");
        assert_eq!(cfg.system.a.get(0, 1), 1.0);
        assert_eq!(cfg.system.a.rows(), 2);
    }

    #[test]
    fn partition_mismatch_is_an_error() {
        let text = fixtures::EXAMPLE1_ADMM_CFG
            .replace("col_sizes = [2, 1]", "col_sizes = [2, 2]");
        assert!(parse_config(&text).is_err());
    }
}
