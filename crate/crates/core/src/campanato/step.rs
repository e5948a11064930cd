use std::sync::Arc;

use serde::Serialize;

use super::fit::{taylor_at_node, QuadraticPolynomial};
use super::CampanatoError;
use crate::grid::{GridFunction, Shape};
use crate::matrix::SymmetricMatrix2;
use crate::mollifier::mollify;
use crate::operators::OperatorSpec;
use crate::solver::{solve_laplace_dirichlet, SolveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepOptions {
    /// Mollification radius; `None` means `4h`.
    pub gamma: Option<f64>,
    /// Radius of the ball on which `P` is compared with `u`.
    pub r_used: f64,
    /// Radius of the ball carrying the harmonic replacement, as a fraction of
    /// the domain radius.
    pub harmonic_fraction: f64,
    pub bisection_steps: usize,
    pub solve: SolveOptions,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            gamma: None,
            r_used: 0.25,
            harmonic_fraction: 0.8,
            bisection_steps: 60,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub gamma_used: f64,
    pub r_used: f64,
    pub harmonic_radius: f64,
    /// `M = sup |u|`.
    pub u_sup: f64,
    pub sup_u_minus_mollified: f64,
    pub sup_u_minus_h: f64,
    pub sup_h_minus_p: f64,
    pub sup_u_minus_p: f64,
    /// The Taylor polynomial of the discrete harmonic replacement at 0.
    pub taylor: QuadraticPolynomial,
    pub correction: f64,
    pub poly: QuadraticPolynomial,
    /// `|F(D²P)|` after the correction.
    pub operator_residual: f64,
    pub hessian_h0_norm: f64,
    /// `(25/4) n^2 M`.
    pub hessian_bound: f64,
    pub hessian_bound_holds: bool,
    pub laplace_sweeps: usize,
}

/// Finds `c` in `[-eps, eps]` with `F(H + c |H| / lambda I) = 0` by bisection,
/// `lambda = lambda_eff`. With `eps = 0` or `H = 0` the answer is `0`.
///
/// When `F` has one sign on the whole interval but stays within `slack` of
/// zero there (a discrete residual, not a genuine failure), the endpoint
/// closest to a root is returned.
pub fn correction_constant(
    spec: &OperatorSpec,
    h: SymmetricMatrix2,
    steps: usize,
    slack: f64,
) -> Result<f64, CampanatoError> {
    let norm = h.op_norm();
    if spec.eps == 0.0 || norm == 0.0 {
        return Ok(0.0);
    }
    let lambda = spec.effective_bounds().lambda;
    let phi = |c: f64| spec.evaluate(h + SymmetricMatrix2::IDENTITY.scaled(c * norm / lambda));
    let (mut lo, mut hi) = (-spec.eps, spec.eps);
    let (at_low, at_high) = (phi(lo), phi(hi));
    if !(at_low <= 0.0 && at_high >= 0.0) {
        if at_low.abs() <= slack && at_high.abs() <= slack {
            return Ok(if at_low.abs() <= at_high.abs() { lo } else { hi });
        }
        return Err(CampanatoError::NoBracket { at_low, at_high });
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if phi(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn sup_diff_in_ball(a: &GridFunction, b: impl Fn(usize, f64, f64) -> f64, r: f64) -> f64 {
    let g = a.grid();
    g.nodes_in_ball((0.0, 0.0), r)
        .into_iter()
        .filter(|&i| a.is_defined(i))
        .map(|i| {
            let (x, y) = g.coord(i);
            (a.value(i) - b(i, x, y)).abs()
        })
        .filter(|d| !d.is_nan())
        .fold(0.0, f64::max)
}

/// One approximation step at the origin: mollify, replace by the discrete
/// harmonic function with the mollified boundary values on the shrunk ball,
/// take its Taylor polynomial at 0 and shift the trace so that `F` vanishes
/// on the Hessian.
pub fn approximation_step(u: &GridFunction, spec: &OperatorSpec, opts: StepOptions) -> Result<StepReport, CampanatoError> {
    let grid = u.grid();
    let radius = grid.radius();
    let gamma = opts.gamma.unwrap_or(4.0 * grid.h());
    let smooth = mollify(u, gamma)?;
    let inner = Arc::new(grid.restricted(Shape::Disk, opts.harmonic_fraction * radius)?);
    let harmonic = solve_laplace_dirichlet(&smooth, &inner, opts.solve)?;
    let h = &harmonic.solution;

    let origin = grid.nearest(0.0, 0.0);
    if grid.coord(origin) != (0.0, 0.0) {
        return Err(CampanatoError::OriginNotNode);
    }
    let taylor = taylor_at_node(h, origin)?;
    let d2h = taylor.c;
    let slack = 2.0 * harmonic.summary.final_residual.max(harmonic.summary.tol);
    let correction = correction_constant(spec, taylor.c, opts.bisection_steps, slack)?;
    let lambda = spec.effective_bounds().lambda;
    let shift = correction * d2h.op_norm() / lambda;
    let poly = QuadraticPolynomial {
        c: taylor.c + SymmetricMatrix2::IDENTITY.scaled(shift),
        ..taylor
    };

    let u_sup = u.sup_norm();
    let hr = inner.radius();
    let hessian_h0_norm = d2h.op_norm();
    let n = 2.0f64;
    let hessian_bound = 25.0 / 4.0 * n * n * u_sup;
    Ok(StepReport {
        gamma_used: gamma,
        r_used: opts.r_used,
        harmonic_radius: hr,
        u_sup,
        sup_u_minus_mollified: sup_diff_in_ball(u, |i, _, _| smooth.value(i), hr),
        sup_u_minus_h: sup_diff_in_ball(h, |i, _, _| u.value(i), hr),
        sup_h_minus_p: sup_diff_in_ball(h, |_, x, y| poly.eval(x, y), opts.r_used),
        sup_u_minus_p: sup_diff_in_ball(u, |_, x, y| poly.eval(x, y), opts.r_used),
        taylor,
        correction,
        poly,
        operator_residual: spec.evaluate(poly.c).abs(),
        hessian_h0_norm,
        hessian_bound,
        hessian_bound_holds: hessian_h0_norm <= hessian_bound,
        laplace_sweeps: harmonic.summary.sweeps,
    })
}
