//! The acceptance suite: eight numbered criteria, each a list of named
//! checks with the measured value and the limit it is held to.
//!
//! Reports contain no timings, so two runs produce identical output.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::campanato::{
    campanato_iterate, certificate_check, discrete_hessian_seminorm, approximation_step, pointwise_fits, pointwise_to_holder,
    subsample_ball, CertificateOptions, PointwiseOptions, StepOptions,
};
use crate::constants::{
    compute_constants, eps0_tilde_branches, holder_factor, C0Variant, EllipticityBounds, ExternalConstants, HolderPair,
};
use crate::cordes::{
    cordes_delta, cordes_delta_matrix, hessian_identity_check, k_eps_margin, k_eps_prime_margin, k_eps_prime_prefactor,
    EigenList,
};
use crate::fields::FieldExpr;
use crate::grid::{Grid2, GridFunction};
use crate::matrix::{Matrix2, SymmetricMatrix2};
use crate::mollifier::{discrete_kernel, mollify, BumpKernel};
use crate::operators::{normalize, residual_audit, OperatorSpec, Perturbation};
use crate::rng::CounterRng;
use crate::solver::{direct_linear_solve, hessian, solve_fully_nonlinear, solve_laplace_dirichlet, SolveOptions};
use crate::wide::Wide;

/// Seed of every randomized check in the suite.
pub const SUITE_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="` or `"=="`.
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            relation: "<=",
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            relation: ">=",
            limit,
            passed: value >= limit,
        }
    }

    fn equals(name: &str, value: f64, expected: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            relation: "==",
            limit: expected,
            passed: value == expected,
        }
    }

    fn failed(name: &str, reason: impl std::fmt::Display) -> Check {
        Check {
            name: format!("{name}: {reason}"),
            value: f64::NAN,
            relation: "==",
            limit: 0.0,
            passed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub all_passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub const CRITERIA: [(u32, &str); 8] = [
    (1, "constants reproduction"),
    (2, "mollifier suite"),
    (3, "solver suite"),
    (4, "decay suite"),
    (5, "pointwise-to-uniform Hölder suite"),
    (6, "Cordes suite"),
    (7, "operator suite"),
    (8, "end-to-end certificate"),
];

pub fn run_criterion(id: u32) -> Option<CriterionReport> {
    let title = CRITERIA.iter().find(|c| c.0 == id)?.1;
    let checks = match id {
        1 => constants_checks(),
        2 => mollifier_checks(),
        3 => solver_checks(),
        4 => decay_checks(),
        5 => holder_checks(),
        6 => cordes_checks(),
        7 => operator_checks(),
        _ => certificate_checks(),
    };
    Some(CriterionReport {
        id,
        title,
        passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn run_suite() -> SuiteReport {
    let criteria: Vec<CriterionReport> = CRITERIA.iter().filter_map(|c| run_criterion(c.0)).collect();
    SuiteReport {
        seed: SUITE_SEED,
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn disk(n: usize) -> Arc<Grid2> {
    Arc::new(Grid2::unit_disk(n).expect("valid grid"))
}

fn sample(grid: &Arc<Grid2>, e: FieldExpr) -> GridFunction {
    GridFunction::from_fn(grid.clone(), move |x, y| e.eval(x, y))
}

fn default_pair() -> HolderPair {
    HolderPair::new(0.25, 0.5).expect("valid pair")
}

fn constants_checks() -> Vec<Check> {
    let ext = ExternalConstants::default();
    let report = match compute_constants(2, EllipticityBounds::unit(), default_pair(), &ext, C0Variant::Proof) {
        Ok(r) => r,
        Err(e) => return vec![Check::failed("compute_constants", e)],
    };
    let mut out = vec![Check::at_most("r0 relative error vs 2.25e-6", rel(report.r0.to_f64(), 2.25e-6), 1e-10)];
    match eps0_tilde_branches(2, 1.0, 0.5, &ext) {
        Ok((a, b)) => out.push(Check {
            name: "eps0_tilde is the smaller branch".into(),
            value: report.eps0_tilde.to_f64(),
            relation: "==",
            limit: a.min(b).to_f64(),
            passed: report.eps0_tilde == a.min(b),
        }),
        Err(e) => out.push(Check::failed("eps0_tilde branches", e)),
    }
    for c in &report.chain_checks {
        out.push(Check {
            name: format!("chain {}", c.name),
            value: c.slack.to_f64(),
            relation: ">=",
            limit: 0.0,
            passed: c.satisfied && !(c.slack < Wide::ZERO),
        });
    }
    out
}

fn mollifier_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut mass_err: f64 = 0.0;
    for (gamma, h) in [(0.04, 0.01), (0.04, 0.02), (0.1, 0.01), (0.19, 0.05), (0.15, 1.0 / 64.0)] {
        match discrete_kernel(gamma, h) {
            Ok(k) => mass_err = mass_err.max((k.mass() - 1.0).abs()),
            Err(e) => return vec![Check::failed("discrete kernel", e)],
        }
    }
    out.push(Check::equals("max |discrete mass - 1|", mass_err, 0.0));

    let g = disk(65);
    let gamma = 4.0 * g.h();
    let root = CounterRng::new(SUITE_SEED).substream(2);
    let mut worst_excess = f64::NEG_INFINITY;
    for j in 0..50 {
        let mut rng = root.substream(j);
        let scale = rng.range(0.1, 10.0);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.symmetric(scale)).collect();
        let u = GridFunction::new(g.clone(), values).expect("sizes match");
        match mollify(&u, gamma) {
            Ok(m) => worst_excess = worst_excess.max(m.sup_norm() - u.sup_norm()),
            Err(e) => return vec![Check::failed("mollify", e)],
        }
    }
    out.push(Check::at_most("max over 50 fields of |u^g| - |u|", worst_excess, 0.0));

    let lin = GridFunction::from_fn(g.clone(), |x, y| 0.3 + 2.0 * x - 1.5 * y);
    match mollify(&lin, gamma) {
        Ok(m) => {
            let d = m.defined_nodes().map(|i| (m.value(i) - lin.value(i)).abs()).fold(0.0, f64::max);
            out.push(Check::at_most("linear function moved by", d, 1e-12));
        }
        Err(e) => out.push(Check::failed("mollify linear", e)),
    }

    let g = disk(201);
    let gamma = 4.0 * g.h();
    let u = sample(&g, FieldExpr::RadialPower(0.5));
    match (mollify(&u, gamma), BumpKernel::new(2, gamma)) {
        (Ok(m), Ok(k)) => {
            let d = m.defined_nodes().map(|i| (m.value(i) - u.value(i)).abs()).fold(0.0, f64::max);
            let bound = gamma.sqrt() + 2.0 * g.h() * k.lipschitz() * u.sup_norm();
            out.push(Check::at_most("|u^g - u| for |x|^(1/2), N=201, bound g^(1/2)", d, gamma.sqrt()));
            out.push(Check::at_most("|u^g - u| for |x|^(1/2), N=201, bound g^(1/2) + slack", d, bound));
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::failed("mollify |x|^(1/2)", e)),
    }
    out
}

fn solver_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let g = disk(65);
    let q = sample(&g, "quadratic:0.5,1,-0.5,2,0.5,-2".parse().expect("valid field"));
    match solve_laplace_dirichlet(&q, &g, SolveOptions::default()) {
        Ok(r) => {
            let d = g.inside_nodes().map(|i| (r.solution.value(i) - q.value(i)).abs()).fold(0.0, f64::max);
            out.push(Check::at_most("harmonic quadratic error", d, 1e-8));
        }
        Err(e) => out.push(Check::failed("laplace", e)),
    }

    let mut errs = Vec::new();
    for n in [65, 129] {
        let g = disk(n);
        let exact = sample(&g, FieldExpr::ExpCos);
        match solve_laplace_dirichlet(&exact, &g, SolveOptions::default()) {
            Ok(r) => errs.push(
                g.inside_nodes()
                    .map(|i| (r.solution.value(i) - exact.value(i)).abs())
                    .fold(0.0, f64::max),
            ),
            Err(e) => return [out, vec![Check::failed("two-grid solve", e)]].concat(),
        }
    }
    out.push(Check::at_least("two-grid order (e^x cos y, N=65/129)", (errs[0] / errs[1]).log2(), 1.8));

    let g = disk(65);
    let spec = OperatorSpec::new(SymmetricMatrix2::new(1.0, 0.3, 2.0), 0.0, Perturbation::None).expect("elliptic");
    let bdry = sample(&g, FieldExpr::SinSin);
    let f = GridFunction::from_fn(g.clone(), |x, y| 1.0 + x * y);
    let opts = SolveOptions {
        tol: Some(1e-12),
        ..Default::default()
    };
    match (
        solve_fully_nonlinear(&spec, Some(&f), &bdry, &g, opts),
        direct_linear_solve(&spec, Some(&f), &bdry, &g),
    ) {
        (Ok(a), Ok(b)) => {
            let d = g.inside_nodes().map(|i| (a.solution.value(i) - b.value(i)).abs()).fold(0.0, f64::max);
            out.push(Check::at_most("eps=0 iterative vs direct", d, 1e-8));
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::failed("linear comparison", e)),
    }

    let g = disk(33);
    let root = CounterRng::new(SUITE_SEED).substream(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    for j in 0..50 {
        let mut rng = root.substream(j);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.symmetric(1.0)).collect();
        let data = GridFunction::new(g.clone(), values).expect("sizes match");
        let (lo, hi) = g
            .boundary_nodes()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(data.value(i)), hi.max(data.value(i)))
            });
        match solve_laplace_dirichlet(&data, &g, SolveOptions::default()) {
            Ok(r) => {
                for i in g.interior_nodes() {
                    let v = r.solution.value(i);
                    worst = worst.max(v - hi).max(lo - v);
                }
            }
            Err(e) => return [out, vec![Check::failed("maximum principle", e)]].concat(),
        }
    }
    out.push(Check::at_most("maximum principle excess over 50 boundary sets", worst, 1e-9));
    out
}

fn decay_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let lap = OperatorSpec::laplacian();

    let g = disk(129);
    let q = sample(&g, "quadratic:0.25,-1,0.5,1,0.75,-1".parse().expect("valid field"));
    let scale = q.sup_norm();
    match campanato_iterate(&q, &lap, 0.5, 4) {
        Ok(t) => {
            let worst = t.records[1..].iter().map(|r| r.sup_dev).fold(0.0, f64::max);
            out.push(Check::at_most("quadratic: max sup_dev / |u|", worst / scale, 1e-9));
        }
        Err(e) => out.push(Check::failed("quadratic iterate", e)),
    }
    match approximation_step(&q, &lap, StepOptions::default()) {
        Ok(r) => {
            let worst = r.sup_u_minus_h.max(r.sup_h_minus_p).max(r.sup_u_minus_p);
            out.push(Check::at_most("quadratic: single-step deviations / |u|", worst / scale, 1e-9));
        }
        Err(e) => out.push(Check::failed("quadratic step", e)),
    }
    match pointwise_fits(&q, 0.5, PointwiseOptions::for_grid(&g)).and_then(|f| pointwise_to_holder(&f, 0.5)) {
        Ok(b) => out.push(Check::at_most("quadratic: certified seminorm / |u|", b / scale, 1e-9)),
        Err(e) => out.push(Check::failed("quadratic pointwise", e)),
    }

    let g = disk(257);
    let cubic = sample(&g, FieldExpr::HarmonicCubic);
    match campanato_iterate(&cubic, &lap, 0.5, 4) {
        Ok(t) => {
            out.push(Check::at_least(
                "harmonic cubic exponent (rho=1/2, kmax=4, N=257)",
                t.fitted_exponent.unwrap_or(f64::NAN),
                2.8,
            ));
            let mut worst: f64 = 0.0;
            for (k, r) in t.records.iter().enumerate() {
                for i in g.nodes_in_ball((0.0, 0.0), r.radius) {
                    let (x, y) = g.coord(i);
                    let direct = r.poly.eval(x, y);
                    let tele = t.telescoped(k, x, y);
                    worst = worst.max((direct - tele).abs() / (1.0 + direct.abs()));
                }
            }
            out.push(Check::at_most("telescoping identity, relative", worst, 1e-13));
        }
        Err(e) => out.push(Check::failed("cubic iterate", e)),
    }

    let g = disk(129);
    let spec = OperatorSpec::new(SymmetricMatrix2::IDENTITY, 0.05, Perturbation::Sine).expect("elliptic");
    let data = sample(&g, FieldExpr::ExpCos);
    match solve_fully_nonlinear(&spec, None, &data, &g, SolveOptions::default()) {
        Ok(r) => match campanato_iterate(&r.solution, &spec, 0.5, 4) {
            Ok(t) => out.push(Check::at_least(
                "sine eps=0.05 solved instance exponent",
                t.fitted_exponent.unwrap_or(f64::NAN),
                2.3,
            )),
            Err(e) => out.push(Check::failed("perturbed iterate", e)),
        },
        Err(e) => out.push(Check::failed("perturbed solve", e)),
    }
    out
}

/// Fields whose Hessian is Hölder with exponent at least 1/2: a shifted
/// `|x|^(2+beta)` bump plus a random cubic.
pub fn synthetic_fields(grid: &Arc<Grid2>, count: u64, seed: u64) -> Vec<GridFunction> {
    let root = CounterRng::new(seed).substream(5);
    (0..count)
        .map(|j| {
            let mut rng = root.substream(j);
            let beta = rng.range(0.5, 0.95);
            let (sx, sy) = (rng.symmetric(0.1), rng.symmetric(0.1));
            let amp = rng.range(0.5, 2.0);
            let c: Vec<f64> = (0..4).map(|_| rng.symmetric(1.0)).collect();
            GridFunction::from_fn(grid.clone(), move |x, y| {
                let r2 = (x - sx).powi(2) + (y - sy).powi(2);
                amp * r2.powf(1.0 + 0.5 * beta) + c[0] * x * x * x + c[1] * x * x * y + c[2] * x * y * y + c[3] * y * y * y
            })
        })
        .collect()
}

fn holder_checks() -> Vec<Check> {
    let closed = (2.0 + 4.0 * std::f64::consts::SQRT_2).powi(2);
    let mut out = vec![Check::at_most("(2+2^2.5)^2 relative error", rel(holder_factor(0.5), closed), 1e-10)];
    let g = disk(129);
    let opts = PointwiseOptions::for_grid(&g);
    let nodes = subsample_ball(&g, (0.0, 0.0), opts.inner_radius, opts.subsample);
    let mut worst_ratio: f64 = 0.0;
    for u in synthetic_fields(&g, 20, SUITE_SEED) {
        let bound = match pointwise_fits(&u, 0.5, opts).and_then(|f| pointwise_to_holder(&f, 0.5)) {
            Ok(b) => b,
            Err(e) => return [out, vec![Check::failed("pointwise fits", e)]].concat(),
        };
        let measured = match hessian(&u) {
            Ok(h) => discrete_hessian_seminorm(&h, &nodes, 0.5),
            Err(e) => return [out, vec![Check::failed("hessian", e)]].concat(),
        };
        worst_ratio = worst_ratio.max(measured / bound);
    }
    out.push(Check::at_most("max over 20 fields of measured / certified", worst_ratio, 1.0));
    out
}

fn rotation(theta: f64) -> Matrix2 {
    let (s, c) = theta.sin_cos();
    Matrix2([[c, -s], [s, c]])
}

fn cordes_checks() -> Vec<Check> {
    let ev = |v: &[f64]| EigenList::new(v.to_vec()).expect("finite");
    let mut out = vec![
        Check::equals("K_eps margin of (1,2)", k_eps_margin(&ev(&[1.0, 2.0])).unwrap_or(f64::NAN), 8.0 / 9.0),
        Check::equals("Cordes delta of I_2", cordes_delta(SymmetricMatrix2::IDENTITY).unwrap_or(f64::NAN), 1.0),
        Check::equals(
            "Cordes delta of I_3",
            cordes_delta_matrix(&DMatrix::identity(3, 3)).unwrap_or(f64::NAN),
            1.0,
        ),
        Check::equals("K'_eps prefactor, n=3", k_eps_prime_prefactor(3), 2.75),
    ];
    let mut rng = CounterRng::new(SUITE_SEED).substream(6);
    let mut coincidence: f64 = 0.0;
    let mut rot2: f64 = 0.0;
    let mut rot3: f64 = 0.0;
    for _ in 0..100 {
        let pair = ev(&[rng.range(0.1, 5.0), rng.range(-1.0, 5.0)]);
        if let (Ok(a), Ok(b)) = (k_eps_margin(&pair), k_eps_prime_margin(&pair)) {
            coincidence = coincidence.max((a - b).abs());
        }
        let a = SymmetricMatrix2::new(rng.range(0.5, 3.0), rng.symmetric(1.0), rng.range(0.5, 3.0));
        let rotated = a.congruence(rotation(rng.range(0.0, std::f64::consts::TAU)));
        if let (Ok(x), Ok(y)) = (cordes_delta(a), cordes_delta(rotated)) {
            rot2 = rot2.max((x - y).abs());
        }
        let b = DMatrix::from_fn(3, 3, |_, _| rng.symmetric(1.0));
        let a3 = &b * b.transpose() + DMatrix::identity(3, 3);
        let q = DMatrix::from_fn(3, 3, |_, _| rng.symmetric(1.0)).qr().q();
        let r3 = &q * &a3 * q.transpose();
        let r3 = (&r3 + r3.transpose()) * 0.5;
        if let (Ok(x), Ok(y)) = (cordes_delta_matrix(&a3), cordes_delta_matrix(&r3)) {
            rot3 = rot3.max((x - y).abs());
        }
    }
    out.push(Check::equals("n=2 K'_eps vs K_eps, max difference", coincidence, 0.0));
    out.push(Check::at_most("rotation invariance, n=2", rot2, 1e-10));
    out.push(Check::at_most("rotation invariance, n=3", rot3, 1e-10));
    let g = disk(65);
    let mut worst: f64 = 0.0;
    for e in [
        "quadratic:0,0,0,2,0,-2".parse().expect("valid field"),
        "quadratic:0,0,0,0,1,0".parse().expect("valid field"),
        FieldExpr::SinSin,
        FieldExpr::HarmonicCubic,
        FieldExpr::ExpCos,
    ] {
        match hessian_identity_check(&sample(&g, e)) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return [out, vec![Check::failed("hessian identity", e)]].concat(),
        }
    }
    out.push(Check::at_most("2-D Hessian identity discrepancy", worst, 1e-10));
    out
}

/// The operators exercised by the audits.
pub fn catalog() -> Vec<OperatorSpec> {
    let sm = Perturbation::from_parts("smooth-max", "1,0,-1,0.1").expect("valid parameters");
    [
        (SymmetricMatrix2::IDENTITY, 0.0, Perturbation::None),
        (SymmetricMatrix2::IDENTITY, 0.05, Perturbation::Sine),
        (SymmetricMatrix2::diag(1.0, 2.0), 0.1, Perturbation::Sine),
        (SymmetricMatrix2::new(2.0, 0.5, 1.0), 0.3, Perturbation::Sine),
        (SymmetricMatrix2::IDENTITY, 0.05, sm),
        (SymmetricMatrix2::diag(2.0, 1.0), 0.2, sm),
    ]
    .into_iter()
    .map(|(w, e, p)| OperatorSpec::new(w, e, p).expect("catalog entries are elliptic"))
    .collect()
}

fn operator_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for (j, spec) in catalog().iter().enumerate() {
        let audit = residual_audit(spec, 10_000, SUITE_SEED + j as u64);
        out.push(Check::at_most(
            &format!("residual audit {} eps={}", spec.perturbation.name(), spec.eps),
            audit,
            spec.eps,
        ));
    }
    let mut rng = CounterRng::new(SUITE_SEED).substream(7);
    let (mut inv, mut grad): (f64, f64) = (0.0, 0.0);
    for j in 0..20 {
        let d = SymmetricMatrix2::diag(rng.range(0.5, 4.0), rng.range(0.5, 4.0));
        let w = d.congruence(rotation(rng.range(0.0, std::f64::consts::TAU)));
        let p = if j % 2 == 0 {
            Perturbation::Sine
        } else {
            Perturbation::from_parts("smooth-max", "1,0,-1,0.1").expect("valid parameters")
        };
        let lo = w.eigenvalues().0;
        let spec = match OperatorSpec::new(w, 0.5 * lo, p) {
            Ok(s) => s,
            Err(e) => return [out, vec![Check::failed("random operator", e)]].concat(),
        };
        match normalize(&spec) {
            Ok(n) => {
                let a = n.a.to_matrix();
                inv = inv.max((a * a * w.to_matrix()).max_abs_diff(Matrix2::IDENTITY));
                grad = grad.max(
                    n.transformed
                        .gradient(SymmetricMatrix2::ZERO)
                        .to_matrix()
                        .max_abs_diff(Matrix2::IDENTITY),
                );
            }
            Err(e) => return [out, vec![Check::failed("normalize", e)]].concat(),
        }
    }
    out.push(Check::at_most("max |A A W - I| over 20 operators", inv, 1e-12));
    out.push(Check::at_most("max |DF~(0) - I| over 20 operators", grad, 1e-6));
    out
}

fn certificate_checks() -> Vec<Check> {
    let ext = ExternalConstants::default();
    let constants = match compute_constants(2, EllipticityBounds::unit(), default_pair(), &ext, C0Variant::Proof) {
        Ok(c) => c,
        Err(e) => return vec![Check::failed("constants", e)],
    };
    let g = disk(129);
    let u = sample(&g, FieldExpr::HarmonicCubic);
    match certificate_check(&u, None, &constants, CertificateOptions::default()) {
        Ok(r) => vec![
            Check::at_least("harmonic cubic measured seminorm", r.measured_seminorm, 0.0),
            Check {
                name: "harmonic cubic certificate satisfied".into(),
                value: r.measured_seminorm,
                relation: "<=",
                limit: r.bound.to_f64(),
                passed: r.satisfied,
            },
        ],
        Err(e) => vec![Check::failed("certificate", e)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        for id in [1, 6, 7, 8] {
            let r = run_criterion(id).unwrap();
            assert!(r.passed, "{r:#?}");
        }
        assert!(run_criterion(9).is_none());
    }
}
