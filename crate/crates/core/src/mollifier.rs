//! The bump kernel `eta(x) = C exp(1/(|x|^2 - 1))`, its derivative masses and
//! discrete convolution of grid functions.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::GridFunction;
use crate::quadrature::{integrate, integrate_pieces};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MollifierError {
    #[error("unsupported dimension {0} (only 1 and 2)")]
    UnsupportedDimension(u32),
    #[error("mollification radius must lie in (0, 1/5), got {0}")]
    BadRadius(f64),
    #[error("kernel under-resolved: grid spacing {h} exceeds half the radius {gamma}")]
    UnderResolved { h: f64, gamma: f64 },
    #[error("no grid node keeps its full kernel support inside the defined region")]
    DomainTooSmall,
}

const QUAD_TOL: f64 = 1e-12;

/// `exp(1/(s-1))` for `s = |x|^2 < 1`, else 0.
pub fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    let t = 1.0 / (s - 1.0);
    if t < -700.0 {
        0.0
    } else {
        t.exp()
    }
}

/// Derivatives of `g(s) = exp(1/(s-1))` with respect to `s`, orders 1 to 3.
fn profile_derivatives(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let t = 1.0 / (s - 1.0);
    if t < -700.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = t.exp();
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    (
        -e * t2,
        e * (t4 + 2.0 * t3),
        -e * (t4 * t2 + 6.0 * t4 * t + 6.0 * t4),
    )
}

/// Third partial derivative of the unnormalized 2-D bump; `p` counts
/// differentiations in `x` (the rest are in `y`).
pub fn bump_third_partial_2d(px: usize, x: f64, y: f64) -> f64 {
    let (_, g2, g3) = profile_derivatives(x * x + y * y);
    // d_ijk b = 8 x_i x_j x_k g''' + 4 g'' (d_ik x_j + d_jk x_i + d_ij x_k)
    let mut idx = [1usize; 3];
    for slot in idx.iter_mut().take(px) {
        *slot = 0;
    }
    let c = [x, y];
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let [i, j, k] = idx;
    8.0 * c[i] * c[j] * c[k] * g3 + 4.0 * g2 * (d(i, k) * c[j] + d(j, k) * c[i] + d(i, j) * c[k])
}

/// Third derivative of the unnormalized 1-D bump.
pub fn bump_third_derivative_1d(x: f64) -> f64 {
    let (_, g2, g3) = profile_derivatives(x * x);
    8.0 * x * x * x * g3 + 12.0 * x * g2
}

fn check_dim(n: u32) -> Result<(), MollifierError> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(MollifierError::UnsupportedDimension(n))
    }
}

/// Constant `C` making `eta` integrate to one over `R^n`.
pub fn normalize(n: u32) -> Result<f64, MollifierError> {
    check_dim(n)?;
    let mass = if n == 1 {
        2.0 * integrate(&|x| bump(x * x), 0.0, 1.0, QUAD_TOL)
    } else {
        2.0 * PI * integrate(&|r| r * bump(r * r), 0.0, 1.0, QUAD_TOL)
    };
    Ok(1.0 / mass)
}

/// `Cprime * max_{|p|=3} int |D^p eta|` for the normalized kernel.
pub fn third_derivative_mass(n: u32, c_prime: f64) -> Result<f64, MollifierError> {
    check_dim(n)?;
    let c = normalize(n)?;
    let radial_breaks = [0.0, 0.25, 0.5, 0.7, 0.8, 0.9, 0.95, 1.0];
    let best = if n == 1 {
        // |eta'''| is even, so integrate one side.
        2.0 * integrate_pieces(&|x| bump_third_derivative_1d(x).abs(), &radial_breaks, 1e-11)
    } else {
        let angles: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
        (0..=3)
            .map(|px| {
                let ring = |r: f64| {
                    r * integrate_pieces(
                        &|th: f64| bump_third_partial_2d(px, r * th.cos(), r * th.sin()).abs(),
                        &angles,
                        1e-11,
                    )
                };
                integrate_pieces(&ring, &radial_breaks, 1e-9)
            })
            .fold(0.0, f64::max)
    };
    Ok(c_prime * c * best)
}

/// Scaled kernel `eta_gamma(x) = gamma^-n eta(x / gamma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpKernel {
    pub n: u32,
    pub c_norm: f64,
    pub gamma: f64,
}

impl BumpKernel {
    pub fn new(n: u32, gamma: f64) -> Result<BumpKernel, MollifierError> {
        check_dim(n)?;
        if !(gamma > 0.0 && gamma < 0.2) {
            return Err(MollifierError::BadRadius(gamma));
        }
        Ok(BumpKernel {
            n,
            c_norm: normalize(n)?,
            gamma,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().map(|v| (v / self.gamma).powi(2)).sum();
        self.c_norm * self.gamma.powi(-(self.n as i32)) * bump(s)
    }

    /// `sup |grad eta_gamma|`.
    pub fn lipschitz(&self) -> f64 {
        // |grad b| = 2 rho |g'(rho^2)| in the unscaled variable rho.
        let samples = 100_000;
        let peak = (1..samples)
            .map(|k| {
                let rho = k as f64 / samples as f64;
                let (g1, _, _) = profile_derivatives(rho * rho);
                2.0 * rho * g1.abs()
            })
            .fold(0.0, f64::max);
        self.c_norm * self.gamma.powi(-(self.n as i32) - 1) * peak
    }
}

/// Kernel sampled on lattice offsets, with weights summing to exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteKernel {
    /// `(row, col)` offsets in grid cells.
    pub offsets: Vec<(isize, isize)>,
    pub weights: Vec<f64>,
    pub reach: usize,
}

impl DiscreteKernel {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn discrete_kernel(gamma: f64, h: f64) -> Result<DiscreteKernel, MollifierError> {
    if !(gamma > 0.0 && gamma < 0.2) {
        return Err(MollifierError::BadRadius(gamma));
    }
    if h > gamma / 2.0 {
        return Err(MollifierError::UnderResolved { h, gamma });
    }
    let reach = (gamma / h).floor() as usize;
    let r = reach as isize;
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    let mut center = 0;
    for a in -r..=r {
        for b in -r..=r {
            let s = ((a * a + b * b) as f64) * (h / gamma).powi(2);
            if s < 1.0 {
                if a == 0 && b == 0 {
                    center = offsets.len();
                }
                offsets.push((a, b));
                weights.push(bump(s));
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    // The centre weight goes last and absorbs the rounding defect: the rest
    // sums to at least 1/2, so `1 - rest` is exact and the total is exactly one.
    let last = offsets.len() - 1;
    offsets.swap(center, last);
    weights.swap(center, last);
    let rest: f64 = weights[..last].iter().sum();
    weights[last] = 1.0 - rest;
    Ok(DiscreteKernel {
        offsets,
        weights,
        reach,
    })
}

/// `eta_gamma * u`, defined at domain nodes whose whole kernel support lies on
/// defined nodes of `u`; `NaN` elsewhere.
///
/// Each output is clamped to the range of the values it averages, so the
/// maximum principle of convolution survives rounding.
pub fn mollify(u: &GridFunction, gamma: f64) -> Result<GridFunction, MollifierError> {
    let grid = u.grid().clone();
    let kernel = discrete_kernel(gamma, grid.h())?;
    let n = grid.n() as isize;
    let reach = kernel.reach as isize;
    let vals = u.values();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if !grid.is_inside(idx) {
                return f64::NAN;
            }
            let (row, col) = grid.row_col(idx);
            let (row, col) = (row as isize, col as isize);
            if row < reach || col < reach || row + reach >= n || col + reach >= n {
                return f64::NAN;
            }
            let mut acc = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (&(a, b), &w) in kernel.offsets.iter().zip(&kernel.weights) {
                let v = vals[((row + a) * n + col + b) as usize];
                if v.is_nan() {
                    return f64::NAN;
                }
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            acc.clamp(lo, hi)
        })
        .collect();
    if out.iter().all(|v| v.is_nan()) {
        return Err(MollifierError::DomainTooSmall);
    }
    Ok(GridFunction::new(grid, out).expect("finite convolution values"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid2, Shape};
    use std::sync::Arc;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn normalization_constants() {
        assert!(rel(normalize(1).unwrap(), 2.25228362104358101050) < 1e-11);
        assert!(rel(normalize(2).unwrap(), 2.14356577579223660100) < 1e-11);
        assert!(normalize(3).is_err());
    }

    #[test]
    fn analytic_third_derivative_matches_finite_differences() {
        let h = 1e-3;
        for &x in &[0.1, 0.45, 0.7, -0.8] {
            let fd = (bump((x + 2.0 * h) * (x + 2.0 * h)) - 2.0 * bump((x + h) * (x + h))
                + 2.0 * bump((x - h) * (x - h))
                - bump((x - 2.0 * h) * (x - 2.0 * h)))
                / (2.0 * h * h * h);
            assert!((fd - bump_third_derivative_1d(x)).abs() < 1e-4 * (1.0 + fd.abs()), "x={x}");
        }
        let b2 = |x: f64, y: f64| bump(x * x + y * y);
        let (x, y) = (0.3, -0.4);
        let fd_xxy = ((b2(x + h, y + h) - 2.0 * b2(x, y + h) + b2(x - h, y + h))
            - (b2(x + h, y - h) - 2.0 * b2(x, y - h) + b2(x - h, y - h)))
            / (2.0 * h * h * h);
        assert!((fd_xxy - bump_third_partial_2d(2, x, y)).abs() < 1e-4);
    }

    #[test]
    fn third_derivative_masses() {
        assert!(rel(third_derivative_mass(1, 1.0).unwrap(), 80.2876495383248289) < 1e-8);
        assert!(rel(third_derivative_mass(1, 2.0).unwrap(), 2.0 * 80.2876495383248289) < 1e-8);
        assert!(rel(third_derivative_mass(2, 1.0).unwrap(), 91.087624) < 2e-6);
    }

    #[test]
    fn discrete_mass_is_exactly_one() {
        for &(g, h) in &[(0.1, 0.01), (0.05, 0.02), (0.19, 1.0 / 64.0), (0.08, 0.03125)] {
            let k = discrete_kernel(g, h).unwrap();
            assert_eq!(k.mass(), 1.0);
        }
        assert!(matches!(discrete_kernel(0.05, 0.03), Err(MollifierError::UnderResolved { .. })));
    }

    #[test]
    fn constants_and_linear_functions_are_fixed() {
        let g = Arc::new(Grid2::unit_disk(65).unwrap());
        let c = mollify(&GridFunction::from_fn(g.clone(), |_, _| 5.0), 0.1).unwrap();
        assert!(c.defined_nodes().all(|i| c.value(i) == 5.0));
        let lin = GridFunction::from_fn(g.clone(), |x, y| 0.3 + 2.0 * x - y);
        let m = mollify(&lin, 0.1).unwrap();
        let err = m.defined_nodes().map(|i| (m.value(i) - lin.value(i)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        // output lives on the shrunk domain
        for i in m.defined_nodes() {
            let (x, y) = g.coord(i);
            assert!(x.hypot(y) <= 1.0 - 0.1 + g.h());
        }
    }

    #[test]
    fn shrink_can_exhaust_domain() {
        let g = Arc::new(Grid2::new(Shape::Square, 17, 0.1).unwrap());
        let u = GridFunction::from_fn(g, |_, _| 1.0);
        assert_eq!(mollify(&u, 0.19), Err(MollifierError::DomainTooSmall));
    }
}
