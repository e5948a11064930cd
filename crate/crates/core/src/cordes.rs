//! Cordes and Nirenberg conditions: eigenvalue margins, the 2-D Hessian
//! identity and nodewise audits of linearized coefficients.
//!
//! Margins are signed; a negative value means the condition fails.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::GridFunction;
use crate::matrix::SymmetricMatrix2;
use crate::operators::OperatorSpec;
use crate::solver::{hessian, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CordesError {
    #[error("trace vanishes; the margins are undefined")]
    ZeroTrace,
    #[error("empty eigenvalue list")]
    Empty,
    #[error("non-finite eigenvalue {0}")]
    NonFinite(f64),
    #[error("matrix is not square and symmetric")]
    NotSymmetric,
    #[error("|I - a|^2 (1 + eps) = {value} is not below 1 at node ({row}, {col})")]
    DeviationTooLarge { value: f64, row: usize, col: usize },
    #[error("eps slack must be positive, got {0}")]
    BadSlack(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenList(Vec<f64>);

impl EigenList {
    pub fn new(mut values: Vec<f64>) -> Result<EigenList, CordesError> {
        if values.is_empty() {
            return Err(CordesError::Empty);
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CordesError::NonFinite(v));
        }
        values.sort_by(f64::total_cmp);
        Ok(EigenList(values))
    }

    pub fn of(m: SymmetricMatrix2) -> EigenList {
        let (lo, hi) = m.eigenvalues();
        EigenList(vec![lo, hi])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn trace(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `sum_{i<k} (l_i - l_k)^2`.
    fn spread(&self) -> f64 {
        let v = &self.0;
        let mut s = 0.0;
        for i in 0..v.len() {
            for k in i + 1..v.len() {
                s += (v[i] - v[k]).powi(2);
            }
        }
        s
    }
}

/// `(n - 1) + n (n - 2) / (n + 1)`.
pub fn k_eps_prime_prefactor(n: usize) -> f64 {
    let n = n as f64;
    (n - 1.0) + n * (n - 2.0) / (n + 1.0)
}

fn margin(ev: &EigenList, prefactor: f64) -> Result<f64, CordesError> {
    let t2 = ev.trace().powi(2);
    if t2 == 0.0 {
        return Err(CordesError::ZeroTrace);
    }
    Ok((t2 - prefactor * ev.spread()) / t2)
}

/// Largest `eps` with `(n - 1) spread <= (1 - eps) (sum l)^2`.
pub fn k_eps_margin(ev: &EigenList) -> Result<f64, CordesError> {
    margin(ev, (ev.dim() - 1) as f64)
}

/// As [`k_eps_margin`] with the primed prefactor.
pub fn k_eps_prime_margin(ev: &EigenList) -> Result<f64, CordesError> {
    margin(ev, k_eps_prime_prefactor(ev.dim()))
}

fn delta_from(trace: f64, hs_sq: f64, n: usize) -> Result<f64, CordesError> {
    if trace == 0.0 {
        return Err(CordesError::ZeroTrace);
    }
    Ok(trace * trace / hs_sq - (n as f64 - 1.0))
}

/// `|tr A|^2 / |A|_HS^2 - (n - 1)`; the Cordes condition holds for smaller `delta`.
pub fn cordes_delta(a: SymmetricMatrix2) -> Result<f64, CordesError> {
    delta_from(a.trace(), a.frobenius_sq(), 2)
}

pub fn cordes_delta_matrix(a: &DMatrix<f64>) -> Result<f64, CordesError> {
    if !a.is_square() || (a - a.transpose()).amax() > 1e-12 * a.amax() {
        return Err(CordesError::NotSymmetric);
    }
    delta_from(a.trace(), a.norm_squared(), a.nrows())
}

/// Threshold `k < (n - 1) / (n - 2)` of the higher-dimensional Nirenberg
/// statement. That statement was published without proof; only its
/// hypothesis is evaluated here. `None` for `n <= 2`.
pub fn unproved_nirenberg_threshold(n: usize) -> Option<f64> {
    (n > 2).then(|| (n as f64 - 1.0) / (n as f64 - 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NirenbergConstants {
    pub k: f64,
    pub k1: f64,
    /// Largest `|I - a|_HS^2` over the field.
    pub max_deviation_sq: f64,
    pub worst_node: usize,
}

/// `k = 2 / (1 - (1 + eps) max|I - a|^2)` and `k1 = (1 + 1/eps) f_bound`.
pub fn nirenberg_constants(
    field: &[(usize, SymmetricMatrix2)],
    grid_n: usize,
    f_bound: f64,
    eps: f64,
) -> Result<NirenbergConstants, CordesError> {
    if !(eps > 0.0) {
        return Err(CordesError::BadSlack(eps));
    }
    let (worst_node, max_deviation_sq) = field
        .iter()
        .map(|&(i, a)| (i, (SymmetricMatrix2::IDENTITY - a).frobenius_sq()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let scaled = (1.0 + eps) * max_deviation_sq;
    if !(scaled < 1.0) {
        return Err(CordesError::DeviationTooLarge {
            value: scaled,
            row: worst_node / grid_n.max(1),
            col: worst_node % grid_n.max(1),
        });
    }
    Ok(NirenbergConstants {
        k: 2.0 / (1.0 - scaled),
        k1: (1.0 + 1.0 / eps) * f_bound,
        max_deviation_sq,
        worst_node,
    })
}

/// `max |(|H|_HS^2) - (tr H)^2 + 2 det H|` over nodes with a discrete Hessian.
pub fn hessian_identity_check(u: &GridFunction) -> Result<f64, CordesError> {
    let h = hessian(u)?;
    Ok(h.nodes()
        .map(|(_, m)| (m.frobenius_sq() - m.trace().powi(2) + 2.0 * m.det()).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NodeMargins {
    pub node: usize,
    pub x: f64,
    pub y: f64,
    pub keps: f64,
    pub kepsprime: f64,
    pub cordesdelta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CordesReport {
    pub nodes: Vec<NodeMargins>,
    /// Coordinates of nodes where the linearized coefficients have zero trace.
    pub zero_trace: Vec<(f64, f64)>,
    pub min_keps: f64,
    pub min_kepsprime: f64,
    pub min_cordesdelta: f64,
}

impl CordesReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,keps,kepsprime,cordesdelta\n");
        for m in &self.nodes {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                m.x, m.y, m.keps, m.kepsprime, m.cordesdelta
            ));
        }
        out
    }
}

/// Margins of `a = DF(D²u)` at every node carrying a discrete Hessian.
pub fn linearized_field(spec: &OperatorSpec, u: &GridFunction) -> Result<CordesReport, CordesError> {
    let h = hessian(u)?;
    let grid = u.grid();
    let per_node: Vec<(usize, SymmetricMatrix2)> = h.nodes().collect();
    let results: Vec<Result<NodeMargins, (f64, f64)>> = per_node
        .par_iter()
        .map(|&(i, m)| {
            let a = spec.gradient(m);
            let (x, y) = grid.coord(i);
            let ev = EigenList::of(a);
            match (k_eps_margin(&ev), k_eps_prime_margin(&ev), cordes_delta(a)) {
                (Ok(keps), Ok(kepsprime), Ok(cordesdelta)) => Ok(NodeMargins {
                    node: i,
                    x,
                    y,
                    keps,
                    kepsprime,
                    cordesdelta,
                }),
                _ => Err((x, y)),
            }
        })
        .collect();
    let mut nodes = Vec::with_capacity(results.len());
    let mut zero_trace = Vec::new();
    for r in results {
        match r {
            Ok(m) => nodes.push(m),
            Err(xy) => zero_trace.push(xy),
        }
    }
    let min = |f: fn(&NodeMargins) -> f64| nodes.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(CordesReport {
        min_keps: min(|m| m.keps),
        min_kepsprime: min(|m| m.kepsprime),
        min_cordesdelta: min(|m| m.cordesdelta),
        nodes,
        zero_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::operators::Perturbation;
    use std::sync::Arc;

    fn ev(v: &[f64]) -> EigenList {
        EigenList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn scalar_margins() {
        assert_eq!(k_eps_margin(&ev(&[1.0, 1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(k_eps_margin(&ev(&[1.0, 2.0])).unwrap(), 8.0 / 9.0);
        assert_eq!(k_eps_margin(&ev(&[1.0, -1.0])), Err(CordesError::ZeroTrace));
        assert_eq!(k_eps_prime_prefactor(2), 1.0);
        assert_eq!(k_eps_prime_prefactor(3), 2.75);
        assert_eq!(k_eps_prime_margin(&ev(&[1.0, 1.0, 2.0])).unwrap(), 0.65625);
        assert_eq!(k_eps_prime_margin(&ev(&[3.0, 3.0, 3.0, 3.0])).unwrap(), 1.0);
        assert_eq!(k_eps_margin(&ev(&[1.0, 10.0])).unwrap(), 40.0 / 121.0);
    }

    #[test]
    fn cordes_delta_values() {
        assert_eq!(cordes_delta(SymmetricMatrix2::IDENTITY).unwrap(), 1.0);
        assert_eq!(cordes_delta_matrix(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        assert_eq!(cordes_delta(SymmetricMatrix2::diag(1.0, 0.0)).unwrap(), 0.0);
        assert!(cordes_delta_matrix(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn nirenberg_closed_forms() {
        let id = [(0, SymmetricMatrix2::IDENTITY); 4];
        let c = nirenberg_constants(&id, 3, 0.7, 1.0).unwrap();
        assert_eq!((c.k, c.k1), (2.0, 1.4));
        let d = [(5, SymmetricMatrix2::diag(1.5, 1.0))];
        assert_eq!(nirenberg_constants(&d, 3, 0.0, 1.0).unwrap().k, 4.0);
        let bad = [(0, SymmetricMatrix2::IDENTITY), (4, SymmetricMatrix2::diag(2.0, 1.0))];
        assert_eq!(
            nirenberg_constants(&bad, 3, 0.0, 1.0),
            Err(CordesError::DeviationTooLarge { value: 2.0, row: 1, col: 1 })
        );
        assert_eq!(unproved_nirenberg_threshold(2), None);
        assert_eq!(unproved_nirenberg_threshold(3), Some(2.0));
    }

    #[test]
    fn hessian_identity_on_smooth_fields() {
        let g = Arc::new(Grid2::unit_disk(65).unwrap());
        for f in [
            (|x: f64, y: f64| x * x - y * y) as fn(f64, f64) -> f64,
            |x, y| x * y,
            |x, y| x.sin() * y.sin(),
        ] {
            let u = GridFunction::from_fn(g.clone(), f);
            assert!(hessian_identity_check(&u).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn linearized_margins() {
        let g = Arc::new(Grid2::unit_disk(33).unwrap());
        let u = GridFunction::from_fn(g.clone(), |x, y| x.exp() * y.cos());
        let r = linearized_field(&OperatorSpec::laplacian(), &u).unwrap();
        assert!(r.zero_trace.is_empty());
        assert!(r.nodes.iter().all(|m| m.keps == 1.0 && m.kepsprime == 1.0 && m.cordesdelta == 1.0));
        let spec = OperatorSpec::new(SymmetricMatrix2::diag(1.0, 2.0), 0.0, Perturbation::None).unwrap();
        let r = linearized_field(&spec, &u).unwrap();
        assert!(r.nodes.iter().all(|m| m.keps == 8.0 / 9.0));
        assert!(r.to_csv().starts_with("x,y,keps,kepsprime,cordesdelta\n"));
    }
}
