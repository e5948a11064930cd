use rayon::prelude::*;
use serde::Serialize;

use super::fit::{taylor_at_node, QuadraticPolynomial};
use super::CampanatoError;
use crate::constants::holder_factor;
use crate::grid::{Grid2, GridFunction};
use crate::solver::HessianField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointwiseOptions {
    /// Centres are taken in this ball around the origin.
    pub inner_radius: f64,
    /// Each centre is tested against the nodes within this distance.
    pub outer_radius: f64,
    /// At most this many centres per axis.
    pub subsample: usize,
}

impl PointwiseOptions {
    /// Inner ball `R/4`, outer radius `R/2`, 33 centres per axis.
    pub fn for_grid(grid: &Grid2) -> Self {
        PointwiseOptions {
            inner_radius: 0.25 * grid.radius(),
            outer_radius: 0.5 * grid.radius(),
            subsample: 33,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointwiseFit {
    pub center: (f64, f64),
    pub poly: QuadraticPolynomial,
    /// Smallest `K` with `|u(x) - P(x - center)| <= K |x - center|^(2+alpha)`
    /// at every tested node.
    pub k_center: f64,
}

/// Nodes of the closed ball on a sublattice through the node nearest `center`,
/// with at most `per_axis` nodes across.
pub fn subsample_ball(grid: &Grid2, center: (f64, f64), r: f64, per_axis: usize) -> Vec<usize> {
    let c = grid.nearest(center.0, center.1);
    let (cr, cc) = grid.row_col(c);
    let across = (2.0 * r / grid.h()).floor() as usize + 1;
    let stride = across.div_ceil(per_axis.max(1)).max(1);
    grid.nodes_in_ball(center, r)
        .into_iter()
        .filter(|&i| {
            let (row, col) = grid.row_col(i);
            row.abs_diff(cr) % stride == 0 && col.abs_diff(cc) % stride == 0
        })
        .collect()
}

/// Discrete Taylor polynomial and pointwise remainder constant at each
/// subsampled centre of the inner ball.
pub fn pointwise_fits(u: &GridFunction, alpha: f64, opts: PointwiseOptions) -> Result<Vec<PointwiseFit>, CampanatoError> {
    let grid = u.grid();
    let centers: Vec<usize> = subsample_ball(grid, (0.0, 0.0), opts.inner_radius, opts.subsample)
        .into_iter()
        .filter(|&i| u.is_defined(i))
        .collect();
    centers
        .par_iter()
        .map(|&i0| {
            let poly = taylor_at_node(u, i0)?;
            let (x0, y0) = grid.coord(i0);
            let k_center = grid
                .nodes_in_ball((x0, y0), opts.outer_radius)
                .into_iter()
                .filter(|&j| j != i0 && u.is_defined(j))
                .map(|j| {
                    let (x, y) = grid.coord(j);
                    let (dx, dy) = (x - x0, y - y0);
                    let d = dx.hypot(dy);
                    (u.value(j) - poly.eval(dx, dy)).abs() / d.powf(2.0 + alpha)
                })
                .fold(0.0, f64::max);
            Ok(PointwiseFit {
                center: (x0, y0),
                poly,
                k_center,
            })
        })
        .collect()
}

/// `(2 + 2^(2+alpha))^2 max K_center`.
pub fn pointwise_to_holder(fits: &[PointwiseFit], alpha: f64) -> Result<f64, CampanatoError> {
    if fits.is_empty() {
        return Err(CampanatoError::MissingFits);
    }
    let k = fits.iter().map(|f| f.k_center).fold(0.0, f64::max);
    Ok(holder_factor(alpha) * k)
}

fn pairwise_max(grid: &Grid2, nodes: &[usize], alpha: f64, dist: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let (xa, ya) = grid.coord(nodes[a]);
            nodes[a + 1..]
                .iter()
                .map(|&j| {
                    let (xb, yb) = grid.coord(j);
                    dist(nodes[a], j) / (xa - xb).hypot(ya - yb).powf(alpha)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `max ||D²u(x) - D²u(y)||_op / |x - y|^alpha` over pairs of the given nodes
/// that carry a Hessian.
pub fn discrete_hessian_seminorm(hess: &HessianField, nodes: &[usize], alpha: f64) -> f64 {
    let nodes: Vec<usize> = nodes.iter().copied().filter(|&i| hess.get(i).is_some()).collect();
    pairwise_max(hess.grid(), &nodes, alpha, |i, j| {
        (hess.get(i).unwrap() - hess.get(j).unwrap()).op_norm()
    })
}

/// `max |f(x) - f(y)| / |x - y|^alpha` over pairs of defined nodes.
pub fn discrete_holder_seminorm(f: &GridFunction, nodes: &[usize], alpha: f64) -> f64 {
    let nodes: Vec<usize> = nodes.iter().copied().filter(|&i| f.is_defined(i)).collect();
    pairwise_max(f.grid(), &nodes, alpha, |i, j| (f.value(i) - f.value(j)).abs())
}

/// Smallest `delta` with `(mean over B_r of f^2)^(1/2) <= delta r^alpha` for
/// the radii `r = m h`, `m >= 4`, up to the domain radius.
pub fn check_f_decay(f: &GridFunction, alpha: f64) -> f64 {
    let grid = f.grid();
    let h = grid.h();
    let radius = grid.radius();
    let slack = 1.0 + 1e-12;
    let mut samples: Vec<(f64, f64)> = f
        .defined_nodes()
        .map(|i| {
            let (x, y) = grid.coord(i);
            (x.hypot(y), f.value(i).powi(2))
        })
        .filter(|&(d, _)| d <= radius * slack)
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut taken, mut sum) = (0usize, 0.0);
    let mut best: f64 = 0.0;
    let mut m = 4usize;
    while (m as f64) * h <= radius * slack {
        let r = m as f64 * h;
        while taken < samples.len() && samples[taken].0 <= r * slack {
            sum += samples[taken].1;
            taken += 1;
        }
        if taken > 0 {
            best = best.max((sum / taken as f64).sqrt() / r.powf(alpha));
        }
        m += 1;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::hessian;
    use std::sync::Arc;

    fn disk(n: usize) -> Arc<Grid2> {
        Arc::new(Grid2::unit_disk(n).unwrap())
    }

    #[test]
    fn quadratic_has_no_pointwise_remainder() {
        let u = GridFunction::from_fn(disk(65), |x, y| 1.0 + x - 2.0 * y + x * x - 3.0 * x * y);
        let fits = pointwise_fits(&u, 0.5, PointwiseOptions::for_grid(u.grid())).unwrap();
        let bound = pointwise_to_holder(&fits, 0.5).unwrap();
        assert!(bound < 1e-6, "{bound}");
        assert_eq!(pointwise_to_holder(&[], 0.5), Err(CampanatoError::MissingFits));
    }

    #[test]
    fn certified_bound_dominates_pairwise_seminorm() {
        let g = disk(129);
        // D²u grows like |x|^(1/2) near the origin.
        let u = GridFunction::from_fn(g.clone(), |x, y| (x * x + y * y).powf(1.25) + 0.3 * x * x * x);
        let opts = PointwiseOptions::for_grid(&g);
        let fits = pointwise_fits(&u, 0.5, opts).unwrap();
        let bound = pointwise_to_holder(&fits, 0.5).unwrap();
        let nodes = subsample_ball(&g, (0.0, 0.0), opts.inner_radius, 33);
        let measured = discrete_hessian_seminorm(&hessian(&u).unwrap(), &nodes, 0.5);
        assert!(measured > 0.0 && bound >= measured, "{bound} vs {measured}");
    }

    #[test]
    fn subsample_respects_the_cap() {
        let g = disk(257);
        let nodes = subsample_ball(&g, (0.0, 0.0), 0.25, 33);
        assert!(nodes.len() <= 33 * 33);
        assert!(nodes.contains(&g.nearest(0.0, 0.0)));
    }

    #[test]
    fn f_decay_closed_forms() {
        let g = disk(129);
        let zero = GridFunction::from_fn(g.clone(), |_, _| 0.0);
        assert_eq!(check_f_decay(&zero, 0.5), 0.0);
        let one = GridFunction::from_fn(g.clone(), |_, _| 1.0);
        assert_eq!(check_f_decay(&one, 0.5), 1.0 / (4.0 * g.h()).powf(0.5));
        let root = GridFunction::from_fn(g.clone(), |x, y| x.hypot(y).sqrt());
        assert!(check_f_decay(&root, 0.5) <= 1.1);
    }

    #[test]
    fn scalar_seminorm_of_a_linear_function() {
        let g = disk(33);
        let f = GridFunction::from_fn(g.clone(), |x, y| 3.0 * x - 4.0 * y);
        let nodes: Vec<usize> = g.inside_nodes().collect();
        let s = discrete_holder_seminorm(&f, &nodes, 1.0);
        assert!((s - 5.0).abs() < 1e-9);
    }
}
