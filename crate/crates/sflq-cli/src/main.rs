//! `sflq` command line: solve one configuration, sweep a parameter, or run
//! the bundled acceptance suite.
//!
//! Exit codes: 0 success, 1 run failure, 2 configuration error,
//! 3 acceptance failure.

use clap::{Parser, Subcommand};
use sflq_cli::config::parse_config;
use sflq_cli::sweep::{sweep_command, sweep_csv, SweepParam};
use sflq_cli::{accept, fixtures, runner};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sflq", about = "Group-sparse feedback LQ synthesis solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trace and report.
    Solve {
        /// Path to a config file, or the name of a bundled one
        /// (e.g. `example1_admm.cfg`).
        config: String,
        /// Trace CSV output path (default: `<config>.trace.csv`).
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Report output path (default: `<config>.report.txt`).
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress stdout summary.
        #[arg(long)]
        quiet: bool,
        /// Include wall-clock timing in the report (breaks byte determinism).
        #[arg(long)]
        timing: bool,
    },
    /// Run the config once per value of a swept parameter.
    Sweep {
        config: String,
        /// Parameter to sweep: beta, gamma, or xi.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Summary CSV output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the acceptance suite (or list its criteria).
    Bench {
        /// List criteria without running them.
        #[arg(long)]
        list: bool,
        /// Run only criteria whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print a bundled configuration to stdout.
    ShowConfig { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, trace_out, report_out, seed, quiet, timing } => {
            solve(&config, trace_out, report_out, seed, quiet, timing)
        }
        Command::Sweep { config, param, values, out, quiet } => {
            sweep(&config, &param, &values, out, quiet)
        }
        Command::Bench { list, filter, quiet } => bench(list, filter.as_deref(), quiet),
        Command::ShowConfig { name } => match fixtures::bundled(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!(
                    "unknown bundled config `{name}`; available: {}",
                    fixtures::bundled_configs()
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                ExitCode::from(2)
            }
        },
    }
}

fn load_config_text(name: &str) -> Result<(String, String), String> {
    let path = Path::new(name);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {name}: {e}"))?;
        let stem = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.to_string());
        return Ok((text, stem));
    }
    if let Some(text) = fixtures::bundled(name) {
        return Ok((text.to_string(), name.to_string()));
    }
    Err(format!("config `{name}` is neither a file nor a bundled preset"))
}

fn solve(
    config_name: &str,
    trace_out: Option<PathBuf>,
    report_out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
    timing: bool,
) -> ExitCode {
    let (text, stem) = match load_config_text(config_name) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("configuration errors in {config_name}:");
            for e in &errs {
                eprintln!("  {e}");
            }
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let trace_path = trace_out.unwrap_or_else(|| PathBuf::from(format!("{stem}.trace.csv")));
    let report_path = report_out.unwrap_or_else(|| PathBuf::from(format!("{stem}.report.txt")));

    let (artifacts, failed) = match runner::run_command_with_partial(&cfg, &stem, timing) {
        Ok(art) => (Some(art), false),
        Err((e, partial)) => {
            eprintln!("run failed: {e}");
            (partial, true)
        }
    };
    if let Some(art) = &artifacts {
        if let Err(e) = std::fs::write(&trace_path, &art.trace_csv) {
            eprintln!("cannot write trace to {}: {e}", trace_path.display());
            return ExitCode::FAILURE;
        }
        if let Err(e) = std::fs::write(&report_path, &art.report) {
            eprintln!("cannot write report to {}: {e}", report_path.display());
            return ExitCode::FAILURE;
        }
        if !quiet {
            print!("{}", art.report);
            println!("trace  -> {}", trace_path.display());
            println!("report -> {}", report_path.display());
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn sweep(
    config_name: &str,
    param: &str,
    values: &str,
    out: Option<PathBuf>,
    quiet: bool,
) -> ExitCode {
    let (text, _) = match load_config_text(config_name) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs {
                eprintln!("{e}");
            }
            return ExitCode::from(2);
        }
    };
    let Some(param) = SweepParam::parse(param) else {
        eprintln!("unknown sweep parameter `{param}` (expected beta, gamma, or xi)");
        return ExitCode::from(2);
    };
    let values: Result<Vec<f64>, _> = values
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let values = match values {
        Ok(v) if !v.is_empty() => v,
        _ => {
            eprintln!("--values must be a comma-separated list of numbers");
            return ExitCode::from(2);
        }
    };
    let rows = sweep_command(&cfg, param, &values);
    let csv = sweep_csv(param, &rows);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &csv) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
            if !quiet {
                println!("sweep table -> {}", path.display());
            }
        }
        None => print!("{csv}"),
    }
    if rows.iter().any(|r| r.outcome.is_err()) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn bench(list: bool, filter: Option<&str>, quiet: bool) -> ExitCode {
    let criteria = accept::criteria();
    if list {
        for c in &criteria {
            println!("{:>2}  {}", c.id, c.name);
        }
        return ExitCode::SUCCESS;
    }
    let mut all_passed = true;
    for c in &criteria {
        if let Some(f) = filter {
            if !c.name.contains(f) {
                continue;
            }
        }
        let result = accept::run_criterion(c);
        all_passed &= result.passed;
        if !quiet || !result.passed {
            println!(
                "criterion {:>2} {:<32} {}  [{:.1}s]  {}",
                result.id,
                result.name,
                if result.passed { "pass" } else { "FAIL" },
                result.seconds,
                result.detail
            );
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
