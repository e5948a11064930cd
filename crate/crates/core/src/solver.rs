//! Finite-difference Dirichlet solvers for `F(D²u) = f` on masked grids.
//!
//! The Hessian uses the 3-point second differences and the 4-point cross
//! stencil, so it is exact on quadratics. The nonlinear solve is a relaxed
//! residual iteration `u <- u + omega * tau * (F(D²u) - f)` with
//! `tau = h² / (4 Lambda_eff)`, applied in place in red-black order
//! (red = even `row + col`, each colour row-major). `omega = 1` is the plain
//! damped fixed point; the default over-relaxes with the optimal SOR factor of
//! the 5-point Laplacian on the domain.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Grid2, GridFunction};
use crate::matrix::SymmetricMatrix2;
use crate::operators::OperatorSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("node ({row}, {col}) lacks a full 3x3 stencil")]
    MissingStencil { row: usize, col: usize },
    #[error("no node of the grid has a full 3x3 stencil")]
    NoStencilSupport,
    #[error("boundary value missing at node ({row}, {col})")]
    MissingBoundary { row: usize, col: usize },
    #[error("right-hand side missing at interior node ({row}, {col})")]
    MissingRhs { row: usize, col: usize },
    #[error("grid has no interior nodes")]
    NoInterior,
    #[error("operator is not elliptic (lambda_eff = {0})")]
    NotElliptic(f64),
    #[error("operator is not linear (eps = {0})")]
    NotLinear(f64),
    #[error("iteration diverged after {sweeps} sweeps (residual {residual:e})")]
    Diverged { sweeps: usize, residual: f64 },
    #[error("iteration stalled at residual {residual:e} after {sweeps} sweeps (tolerance {tol:e})")]
    Stalled { sweeps: usize, residual: f64, tol: f64 },
    #[error("no convergence within {sweeps} sweeps (residual {residual:e}, tolerance {tol:e})")]
    BudgetExhausted { sweeps: usize, residual: f64, tol: f64 },
    #[error("grid functions live on different grids")]
    GridMismatch,
}

/// Discrete Hessian at nodes with a full 3x3 stencil of defined values.
#[derive(Clone, Debug)]
pub struct HessianField {
    grid: Arc<Grid2>,
    values: Vec<Option<SymmetricMatrix2>>,
}

impl HessianField {
    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn at(&self, idx: usize) -> Result<SymmetricMatrix2, SolverError> {
        self.values[idx].ok_or_else(|| {
            let (row, col) = self.grid.row_col(idx);
            SolverError::MissingStencil { row, col }
        })
    }

    pub fn get(&self, idx: usize) -> Option<SymmetricMatrix2> {
        self.values[idx]
    }

    /// Nodes carrying a Hessian, in index order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, SymmetricMatrix2)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|m| (i, m)))
    }
}

#[inline]
fn stencil(vals: &[f64], n: usize, i: usize, inv_h2: f64) -> SymmetricMatrix2 {
    let c = vals[i];
    let uxx = (vals[i + 1] - 2.0 * c + vals[i - 1]) * inv_h2;
    let uyy = (vals[i + n] - 2.0 * c + vals[i - n]) * inv_h2;
    let uxy = (vals[i + n + 1] - vals[i + n - 1] - vals[i - n + 1] + vals[i - n - 1]) * (0.25 * inv_h2);
    SymmetricMatrix2::new(uxx, uxy, uyy)
}

fn has_stencil(u: &GridFunction, idx: usize) -> bool {
    let g = u.grid();
    let n = g.n();
    let (row, col) = g.row_col(idx);
    if !g.is_inside(idx) || row == 0 || col == 0 || row + 1 == n || col + 1 == n {
        return false;
    }
    (0..3).all(|dr| (0..3).all(|dc| u.is_defined((row + dr - 1) * n + col + dc - 1)))
}

pub fn hessian(u: &GridFunction) -> Result<HessianField, SolverError> {
    let grid = u.grid().clone();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let n = grid.n();
    let values: Vec<Option<SymmetricMatrix2>> = (0..grid.len())
        .map(|i| has_stencil(u, i).then(|| stencil(u.values(), n, i, inv_h2)))
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(SolverError::NoStencilSupport);
    }
    Ok(HessianField { grid, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Max-node residual target; `None` picks the per-solver default.
    pub tol: Option<f64>,
    pub max_sweeps: usize,
    /// Relaxation factor; `None` picks the SOR optimum for the domain size.
    pub relaxation: Option<f64>,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: None,
            max_sweeps: 1_000_000,
            relaxation: None,
            divergence_window: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub final_residual: f64,
    pub sweeps: usize,
    pub h: f64,
    pub tol: f64,
    pub relaxation: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub summary: SolveSummary,
}

fn default_relaxation(grid: &Grid2) -> f64 {
    let cells = grid.radius() / grid.extent() * (grid.n() - 1) as f64;
    2.0 / (1.0 + (std::f64::consts::PI / cells.max(2.0)).sin())
}

fn boundary_values(grid: &Grid2, g: &GridFunction) -> Result<Vec<f64>, SolverError> {
    if **g.grid() != *grid && (g.grid().n() != grid.n() || g.grid().extent() != grid.extent()) {
        return Err(SolverError::GridMismatch);
    }
    let mut u = vec![f64::NAN; grid.len()];
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in grid.boundary_nodes() {
        let v = g.value(i);
        if v.is_nan() {
            let (row, col) = grid.row_col(i);
            return Err(SolverError::MissingBoundary { row, col });
        }
        u[i] = v;
        sum += v;
        count += 1;
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    for i in grid.interior_nodes() {
        u[i] = mean;
    }
    Ok(u)
}

fn boundary_sup(grid: &Grid2, u: &[f64]) -> f64 {
    grid.boundary_nodes().fold(0.0, |m: f64, i| m.max(u[i].abs()))
}

struct Engine<'a> {
    grid: &'a Grid2,
    colours: [Vec<usize>; 2],
    rhs: Vec<f64>,
    spec: &'a OperatorSpec,
    step: f64,
    inv_h2: f64,
    tol: f64,
    opts: SolveOptions,
}

impl Engine<'_> {
    fn residual_at(&self, u: &[f64], i: usize) -> f64 {
        self.spec.evaluate(stencil(u, self.grid.n(), i, self.inv_h2)) - self.rhs[i]
    }

    fn full_residual(&self, u: &[f64]) -> f64 {
        self.colours
            .iter()
            .flatten()
            .fold(0.0, |m: f64, &i| m.max(self.residual_at(u, i).abs()))
    }

    fn run(&self, u: &mut [f64]) -> Result<(f64, usize), SolverError> {
        let initial = self.full_residual(u);
        if initial <= self.tol {
            return Ok((initial, 0));
        }
        let stall_window = 20 * self.grid.n() + 2000;
        let mut prev = f64::INFINITY;
        let mut rising = 0;
        let mut best = f64::INFINITY;
        let mut best_at = 0;
        for sweep in 1..=self.opts.max_sweeps {
            let mut worst: f64 = 0.0;
            for colour in &self.colours {
                for &i in colour {
                    let r = self.residual_at(u, i);
                    u[i] += self.step * r;
                    worst = worst.max(r.abs());
                }
            }
            if !worst.is_finite() {
                return Err(SolverError::Diverged { sweeps: sweep, residual: worst });
            }
            if worst <= self.tol {
                let check = self.full_residual(u);
                if check <= self.tol {
                    return Ok((check, sweep));
                }
            }
            rising = if worst > prev { rising + 1 } else { 0 };
            if rising >= self.opts.divergence_window {
                return Err(SolverError::Diverged { sweeps: sweep, residual: worst });
            }
            prev = worst;
            if worst < best * (1.0 - 1e-3) {
                best = worst;
                best_at = sweep;
            } else if sweep - best_at > stall_window {
                return Err(SolverError::Stalled {
                    sweeps: sweep,
                    residual: worst,
                    tol: self.tol,
                });
            }
        }
        Err(SolverError::BudgetExhausted {
            sweeps: self.opts.max_sweeps,
            residual: self.full_residual(u),
            tol: self.tol,
        })
    }
}

fn solve_with(
    grid: &Arc<Grid2>,
    spec: &OperatorSpec,
    rhs: Vec<f64>,
    mut u: Vec<f64>,
    tol: f64,
    opts: SolveOptions,
) -> Result<SolveReport, SolverError> {
    let bounds = spec.effective_bounds();
    if !(bounds.lambda > 0.0) {
        return Err(SolverError::NotElliptic(bounds.lambda));
    }
    let mut colours = [Vec::new(), Vec::new()];
    for i in grid.interior_nodes() {
        let (row, col) = grid.row_col(i);
        colours[(row + col) % 2].push(i);
    }
    if colours[0].is_empty() && colours[1].is_empty() {
        return Err(SolverError::NoInterior);
    }
    let h = grid.h();
    let relaxation = opts.relaxation.unwrap_or_else(|| default_relaxation(grid));
    let engine = Engine {
        grid,
        colours,
        rhs,
        spec,
        step: relaxation * h * h / (4.0 * bounds.big_lambda),
        inv_h2: 1.0 / (h * h),
        tol,
        opts,
    };
    let (final_residual, sweeps) = engine.run(&mut u)?;
    let solution = GridFunction::new(grid.clone(), u).map_err(|_| SolverError::Diverged {
        sweeps,
        residual: f64::INFINITY,
    })?;
    Ok(SolveReport {
        solution,
        summary: SolveSummary {
            final_residual,
            sweeps,
            h,
            tol,
            relaxation,
        },
    })
}

/// Discrete harmonic function on `grid` with boundary values from `g`
/// (`g` may live on a larger domain of the same lattice). Default tolerance
/// on the 5-point Laplacian residual is `1e-10 * max |g|`.
pub fn solve_laplace_dirichlet(g: &GridFunction, grid: &Arc<Grid2>, opts: SolveOptions) -> Result<SolveReport, SolverError> {
    let u = boundary_values(grid, g)?;
    let tol = opts.tol.unwrap_or(1e-10 * boundary_sup(grid, &u));
    solve_with(grid, &OperatorSpec::laplacian(), vec![0.0; grid.len()], u, tol, opts)
}

/// Solves `F(D²u) = f` with `u = g` on the boundary; `f = None` means zero.
/// Default tolerance `1e-8 * (max|g| + max|f| + 1)`.
pub fn solve_fully_nonlinear(
    spec: &OperatorSpec,
    f: Option<&GridFunction>,
    g: &GridFunction,
    grid: &Arc<Grid2>,
    opts: SolveOptions,
) -> Result<SolveReport, SolverError> {
    let u = boundary_values(grid, g)?;
    let mut rhs = vec![0.0; grid.len()];
    let mut f_sup: f64 = 0.0;
    if let Some(f) = f {
        if f.grid().n() != grid.n() || f.grid().extent() != grid.extent() {
            return Err(SolverError::GridMismatch);
        }
        for i in grid.interior_nodes() {
            let v = f.value(i);
            if v.is_nan() {
                let (row, col) = grid.row_col(i);
                return Err(SolverError::MissingRhs { row, col });
            }
            rhs[i] = v;
            f_sup = f_sup.max(v.abs());
        }
    }
    let tol = opts.tol.unwrap_or(1e-8 * (boundary_sup(grid, &u) + f_sup + 1.0));
    solve_with(grid, spec, rhs, u, tol, opts)
}

/// Direct banded elimination of the linear stencil system `tr(W0 D²u) = f`,
/// `u = g` on the boundary. Independent of the iterative engine; used as a
/// reference in tests and the self-test suite.
pub fn direct_linear_solve(
    spec: &OperatorSpec,
    f: Option<&GridFunction>,
    g: &GridFunction,
    grid: &Arc<Grid2>,
) -> Result<GridFunction, SolverError> {
    if spec.eps != 0.0 {
        return Err(SolverError::NotLinear(spec.eps));
    }
    let n = grid.n();
    let len = grid.len();
    let fixed = boundary_values(grid, g)?;
    let bw = n + 1;
    let width = 2 * bw + 1;
    let mut band = vec![0.0; len * width];
    let mut rhs = vec![0.0; len];
    let at = |i: usize, j: usize| i * width + (j + bw - i);
    let h2 = grid.h() * grid.h();
    let w = spec.w0;
    let weights: [(isize, isize, f64); 9] = [
        (0, 0, -2.0 * (w.m11 + w.m22)),
        (0, 1, w.m11),
        (0, -1, w.m11),
        (1, 0, w.m22),
        (-1, 0, w.m22),
        (1, 1, 0.5 * w.m12),
        (-1, -1, 0.5 * w.m12),
        (1, -1, -0.5 * w.m12),
        (-1, 1, -0.5 * w.m12),
    ];
    for i in 0..len {
        if !grid.is_interior(i) {
            band[at(i, i)] = 1.0;
            rhs[i] = if fixed[i].is_nan() { 0.0 } else { fixed[i] };
            continue;
        }
        let mut b = h2 * f.map_or(0.0, |f| f.value(i));
        if b.is_nan() {
            let (row, col) = grid.row_col(i);
            return Err(SolverError::MissingRhs { row, col });
        }
        for &(dr, dc, c) in &weights {
            let j = (i as isize + dr * n as isize + dc) as usize;
            if grid.is_interior(j) {
                band[at(i, j)] += c;
            } else {
                b -= c * fixed[j];
            }
        }
        rhs[i] = b;
    }
    for k in 0..len {
        let pivot = band[at(k, k)];
        let last = (k + bw).min(len - 1);
        for i in k + 1..=last {
            let factor = band[at(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k..=last {
                band[at(i, j)] -= factor * band[at(k, j)];
            }
            rhs[i] -= factor * rhs[k];
        }
    }
    let mut x = vec![0.0; len];
    for k in (0..len).rev() {
        let last = (k + bw).min(len - 1);
        let mut s = rhs[k];
        for j in k + 1..=last {
            s -= band[at(k, j)] * x[j];
        }
        x[k] = s / band[at(k, k)];
    }
    for (i, v) in x.iter_mut().enumerate() {
        if !grid.is_inside(i) {
            *v = f64::NAN;
        }
    }
    GridFunction::new(grid.clone(), x).map_err(|_| SolverError::GridMismatch)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ComparisonOutcome {
    /// `lower <= upper` at every interior node.
    Ordered,
    /// Ordering fails at the given node.
    Crossed { row: usize, col: usize, gap: f64 },
    /// The hypotheses of the comparison principle do not hold.
    PreconditionViolated { reason: String, row: usize, col: usize },
}

impl ComparisonOutcome {
    pub fn is_ordered(&self) -> bool {
        matches!(self, ComparisonOutcome::Ordered)
    }
}

/// Discrete comparison: checks `F(D²lower) >= f >= F(D²upper)` in the
/// interior and `lower <= upper` on the boundary (each up to `tol`), then
/// whether `lower <= upper + tol` at every interior node.
pub fn comparison_check(
    lower: &GridFunction,
    upper: &GridFunction,
    spec: &OperatorSpec,
    f: Option<&GridFunction>,
    tol: f64,
) -> Result<ComparisonOutcome, SolverError> {
    if **lower.grid() != **upper.grid() {
        return Err(SolverError::GridMismatch);
    }
    let grid = lower.grid();
    let hl = hessian(lower)?;
    let hu = hessian(upper)?;
    let violated = |reason: &str, i: usize| {
        let (row, col) = grid.row_col(i);
        Ok(ComparisonOutcome::PreconditionViolated {
            reason: reason.to_string(),
            row,
            col,
        })
    };
    for i in grid.boundary_nodes() {
        if !(lower.value(i) <= upper.value(i) + tol) {
            return violated("lower exceeds upper on the boundary", i);
        }
    }
    for i in grid.interior_nodes() {
        let fi = f.map_or(0.0, |f| f.value(i));
        let (Some(a), Some(b)) = (hl.get(i), hu.get(i)) else {
            return violated("missing stencil", i);
        };
        if spec.evaluate(a) < fi - tol {
            return violated("lower is not a subsolution", i);
        }
        if spec.evaluate(b) > fi + tol {
            return violated("upper is not a supersolution", i);
        }
    }
    for i in grid.interior_nodes() {
        let gap = lower.value(i) - upper.value(i);
        if gap > tol {
            let (row, col) = grid.row_col(i);
            return Ok(ComparisonOutcome::Crossed { row, col, gap });
        }
    }
    Ok(ComparisonOutcome::Ordered)
}
