//! Quadratic approximation at shrinking scales: least-squares fits, the
//! polynomial iteration, the single harmonic-replacement step, pointwise to
//! uniform Hölder bounds and the final certificates.

mod certificate;
mod fit;
mod holder;
mod iterate;
mod step;

pub use certificate::{certificate_check, CertificateMode, CertificateOptions, CertificateReport};
pub use fit::{fit_points, fit_quadratic, taylor_at_node, QuadraticFit, QuadraticPolynomial};
pub use holder::{
    check_f_decay, discrete_hessian_seminorm, discrete_holder_seminorm, pointwise_fits, pointwise_to_holder,
    subsample_ball, PointwiseFit, PointwiseOptions,
};
pub use iterate::{campanato_iterate, inhomogeneous_iterate, DecayRecord, DecayTable, ExponentStatus, ScaleCheck};
pub use step::{correction_constant, approximation_step, StepOptions, StepReport};

use thiserror::Error;

use crate::grid::GridError;
use crate::mollifier::MollifierError;
use crate::solver::SolverError;

/// Fewest nodes accepted for a quadratic fit.
pub const MIN_FIT_NODES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CampanatoError {
    #[error("only {found} nodes in the fitting ball (need at least 12)")]
    InsufficientNodes { found: usize },
    #[error("degenerate node set: the quadratic normal equations are singular")]
    Degenerate,
    #[error("the origin is not a grid node (use an odd node count)")]
    OriginNotNode,
    #[error("node ({row}, {col}) has no usable stencil for a Taylor polynomial")]
    NoTaylor { row: usize, col: usize },
    #[error("correction constant not bracketed in [-eps, eps]: F = {at_low:e} at -eps and {at_high:e} at +eps")]
    NoBracket { at_low: f64, at_high: f64 },
    #[error("no pointwise fits supplied")]
    MissingFits,
    #[error("ball of radius {radius} is under-resolved ({nodes} usable nodes)")]
    UnderResolved { radius: f64, nodes: usize },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mollifier(#[from] MollifierError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
