//! The subcommands. Each returns the text for stdout, any warnings for stderr
//! and the exit code; files are written only once a command has succeeded.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ellreg_core::acceptance::{run_criterion, SuiteReport, CRITERIA, SUITE_SEED};
use ellreg_core::campanato::{
    campanato_iterate, certificate_check, inhomogeneous_iterate, approximation_step, CertificateMode, CertificateOptions,
    StepOptions,
};
use ellreg_core::constants::{compute_constants, ConstantsReport, EllipticityBounds, HolderPair};
use ellreg_core::cordes::{linearized_field, nirenberg_constants, unproved_nirenberg_threshold};
use ellreg_core::grid::{Grid2, GridFunction};
use ellreg_core::operators::{derivative_oscillation, residual_audit, OperatorSpec, Perturbation};
use ellreg_core::solver::{hessian, solve_fully_nonlinear, SolveOptions};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub code: i32,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(dir: &Option<String>) -> Result<Option<PathBuf>, CliError> {
    match dir {
        None => Ok(None),
        Some(d) => {
            let p = PathBuf::from(d);
            std::fs::create_dir_all(&p).map_err(|e| usage(format!("cannot create {d}: {e}")))?;
            Ok(Some(p))
        }
    }
}

pub fn build_spec(cfg: &RunConfig) -> Result<OperatorSpec, CliError> {
    let op = &cfg.operator;
    let p = Perturbation::from_parts(&op.perturbation, &op.params).map_err(usage)?;
    OperatorSpec::new(op.w0, op.eps, p).map_err(usage)
}

fn build_grid(cfg: &RunConfig) -> Result<Arc<Grid2>, CliError> {
    Grid2::new(cfg.grid.shape, cfg.grid.n, cfg.grid.extent)
        .map(Arc::new)
        .map_err(usage)
}

pub fn load_grid_file(path: &str) -> Result<GridFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
    GridFunction::from_text(&text).map_err(|e| usage(format!("{path}:{}: {}", e.line, e.message)))
}

fn rhs_on(cfg: &RunConfig, grid: &Arc<Grid2>) -> Result<Option<GridFunction>, CliError> {
    if let Some(path) = &cfg.solve.rhs_file {
        let f = load_grid_file(path)?;
        if **f.grid() != **grid {
            return Err(usage(format!("{path}: right-hand side lives on a different grid")));
        }
        return Ok(Some(f));
    }
    let e = &cfg.solve.rhs;
    Ok((!e.is_zero()).then(|| GridFunction::from_fn(grid.clone(), move |x, y| e.eval(x, y))))
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        tol: cfg.solve.tol,
        max_sweeps: cfg.solve.max_sweeps,
        relaxation: cfg.solve.relaxation,
        ..Default::default()
    }
}

pub fn constants_for(cfg: &RunConfig, spec: Option<&OperatorSpec>) -> Result<ConstantsReport, CliError> {
    let c = &cfg.constants;
    let eff = spec.map_or(EllipticityBounds::unit(), |s| s.effective_bounds());
    let bounds = EllipticityBounds::new(c.lambda.unwrap_or(eff.lambda), c.big_lambda.unwrap_or(eff.big_lambda))
        .map_err(usage)?;
    let pair = HolderPair::new(c.alpha.unwrap_or(0.5 * c.alpha_bar), c.alpha_bar).map_err(usage)?;
    compute_constants(c.n, bounds, pair, &c.external, c.c0_variant).map_err(usage)
}

pub fn cmd_constants(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let report = constants_for(cfg, Some(&spec))?;
    let text = pretty(&report);
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    let failed: Vec<String> = report
        .chain_checks
        .iter()
        .filter(|c| !c.satisfied)
        .map(|c| format!("chain check {} fails", c.name))
        .collect();
    Ok(Outcome {
        stdout: text,
        code: if failed.is_empty() { 0 } else { 1 },
        warnings: failed,
    })
}

/// Solves the configured problem; used by `solve` and by `analyze` without an input file.
fn solve_configured(cfg: &RunConfig, spec: &OperatorSpec) -> Result<(ellreg_core::solver::SolveReport, Option<GridFunction>), CliError> {
    let grid = build_grid(cfg)?;
    let b = &cfg.solve.boundary;
    let g = GridFunction::from_fn(grid.clone(), move |x, y| b.eval(x, y));
    let f = rhs_on(cfg, &grid)?;
    let report = solve_fully_nonlinear(spec, f.as_ref(), &g, &grid, solve_options(cfg)).map_err(numerical)?;
    Ok((report, f))
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let (report, _) = solve_configured(cfg, &spec)?;
    let summary = pretty(&report.summary);
    if let Some(p) = &cfg.solve.out {
        write_file(Path::new(p), &report.solution.to_text())?;
    }
    if let Some(p) = &cfg.solve.summary {
        write_file(Path::new(p), &summary)?;
    }
    Ok(Outcome {
        stdout: summary,
        warnings: Vec::new(),
        code: 0,
    })
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let a = &cfg.analyze;
    let (u, f) = match &a.input {
        Some(path) => {
            let u = load_grid_file(path)?;
            let f = rhs_on(cfg, u.grid())?;
            (u, f)
        }
        None => {
            let (r, f) = solve_configured(cfg, &spec)?;
            (r.solution, f)
        }
    };
    let constants = constants_for(cfg, Some(&spec))?;
    let alpha = constants.pair.alpha;
    let table = match &f {
        None => campanato_iterate(&u, &spec, a.rho, a.kmax),
        Some(f) => inhomogeneous_iterate(&u, &spec, f, a.rho, a.kmax, alpha),
    }
    .map_err(numerical)?;

    let mut warnings = Vec::new();
    if table.truncated {
        warnings.push(format!(
            "decay table truncated after {} of {} scales: the balls ran out of grid nodes",
            table.records.len() - 1,
            a.kmax
        ));
    }
    let step_opts = StepOptions {
        gamma: a.gamma,
        solve: solve_options(cfg),
        ..Default::default()
    };
    let step = match approximation_step(&u, &spec, step_opts) {
        Ok(s) => serde_json::to_value(s).expect("reports serialize"),
        Err(e) => {
            warnings.push(format!("single approximation step unavailable: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    let cert_opts = CertificateOptions {
        subsample: a.subsample,
        ..Default::default()
    };
    let certificate = certificate_check(&u, f.as_ref(), &constants, cert_opts).map_err(numerical)?;
    let csv = table.to_csv();
    let certificate_json = pretty(&certificate);
    let summary = pretty(&json!({
        "decay": {
            "rho": table.rho,
            "target_exponent": table.target_exponent,
            "fitted_exponent": table.fitted_exponent,
            "exponent_status": table.exponent_status,
            "truncated": table.truncated,
            "records": table.records,
            "scale_checks": table.scale_checks,
        },
        "step": step,
        "certificate": {
            "mode": certificate.mode,
            "measured_seminorm": certificate.measured_seminorm,
            "bound": certificate.bound,
            "satisfied": certificate.satisfied,
            "radius": certificate.radius,
            "nodes_used": certificate.nodes_used,
        },
        "warnings": warnings,
    }));
    if let Some(dir) = out_dir(&a.out_dir)? {
        write_file(&dir.join("decay.csv"), &csv)?;
        write_file(&dir.join("certificate.json"), &certificate_json)?;
        write_file(&dir.join("analyze.json"), &summary)?;
    }
    let mut code = match certificate.mode {
        CertificateMode::Homogeneous if !certificate.satisfied => 1,
        _ => 0,
    };
    if a.strict && table.truncated {
        code = 1;
    }
    Ok(Outcome {
        stdout: summary,
        warnings,
        code,
    })
}

pub fn cmd_cordes(cfg: &RunConfig, input: Option<&str>, out_dir_flag: &Option<String>) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let u = match input {
        Some(path) => load_grid_file(path)?,
        None => GridFunction::from_fn(build_grid(cfg)?, |_, _| 0.0),
    };
    let report = linearized_field(&spec, &u).map_err(numerical)?;
    let f_bound = rhs_on(cfg, u.grid())?.map_or(0.0, |f| f.sup_norm());
    let field: Vec<_> = hessian(&u)
        .map_err(numerical)?
        .nodes()
        .map(|(i, m)| (i, spec.gradient(m)))
        .collect();
    let nirenberg = match nirenberg_constants(&field, u.grid().n(), f_bound, 1.0) {
        Ok(c) => serde_json::to_value(c).expect("reports serialize"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let samples = cfg.run.audit_samples;
    let seed = cfg.run.seed;
    let mut warnings: Vec<String> = report
        .zero_trace
        .iter()
        .map(|(x, y)| format!("linearized coefficients have zero trace at ({x:e}, {y:e})"))
        .collect();
    let min_kp = report.min_kepsprime;
    if !(min_kp > 0.0) {
        warnings.push(format!("K'_eps condition fails: minimum margin {min_kp:e}"));
    }
    let summary = pretty(&json!({
        "nodes": report.nodes.len(),
        "min_keps": report.min_keps,
        "min_kepsprime": report.min_kepsprime,
        "min_cordesdelta": report.min_cordesdelta,
        "zero_trace": report.zero_trace,
        "nirenberg": nirenberg,
        "unproved_threshold": {
            "n": 3,
            "k_below": unproved_nirenberg_threshold(3),
            "status": "stated without proof; only the hypothesis is evaluated",
        },
        "audit": {
            "seed": seed,
            "samples": samples,
            "residual": residual_audit(&spec, samples, seed),
            "eps": spec.eps,
            "derivative_oscillation": derivative_oscillation(&spec, samples, seed),
        },
    }));
    if let Some(dir) = out_dir(out_dir_flag)? {
        write_file(&dir.join("cordes.csv"), &report.to_csv())?;
        write_file(&dir.join("cordes.json"), &summary)?;
    }
    let code = if min_kp > 0.0 && report.zero_trace.is_empty() { 0 } else { 1 };
    Ok(Outcome {
        stdout: summary,
        warnings,
        code,
    })
}

pub fn cmd_selftest(only: &[u32], out: Option<&Path>) -> Result<Outcome, CliError> {
    for id in only {
        if !CRITERIA.iter().any(|c| c.0 == *id) {
            return Err(usage(format!("no criterion {id} (expected 1 to {})", CRITERIA.len())));
        }
    }
    let criteria: Vec<_> = CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.0))
        .filter_map(|c| run_criterion(c.0))
        .collect();
    let report = SuiteReport {
        seed: SUITE_SEED,
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    let warnings = report
        .criteria
        .iter()
        .map(|c| format!("criterion {} ({}): {}", c.id, c.title, if c.passed { "PASS" } else { "FAIL" }))
        .collect();
    let text = pretty(&report);
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    Ok(Outcome {
        stdout: text,
        warnings,
        code: if report.all_passed { 0 } else { 1 },
    })
}
