use serde::Serialize;

use super::holder::{discrete_hessian_seminorm, discrete_holder_seminorm, subsample_ball};
use super::CampanatoError;
use crate::constants::{holder_factor, ConstantsReport};
use crate::grid::GridFunction;
use crate::solver::hessian;
use crate::wide::Wide;

/// Fewest Hessian-carrying nodes accepted in the certified ball.
const MIN_BALL_NODES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateOptions {
    pub subsample: usize,
    /// Replaces the computed bound; used to force a failing comparison.
    pub bound_override: Option<Wide>,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            subsample: 33,
            bound_override: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    /// `[D²u]_alpha_bar` on `B_{R/(4 Lambda)}` against `C1 |u|`.
    Homogeneous,
    /// `[D²u]_alpha` on `B_{R/2}` against the iteration bound built from `C4`;
    /// no pass/fail meaning is attached.
    Informational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: CertificateMode,
    pub exponent: f64,
    pub radius: f64,
    pub nodes_used: usize,
    pub u_sup: f64,
    pub f_sup: Option<f64>,
    pub f_seminorm: Option<f64>,
    pub measured_seminorm: f64,
    pub bound: Wide,
    pub satisfied: bool,
    pub constants_used: ConstantsReport,
}

/// Compares the measured Hessian Hölder seminorm of a computed solution with
/// the explicit bound. A nonzero `f` switches to the informational mode.
pub fn certificate_check(
    u: &GridFunction,
    f: Option<&GridFunction>,
    constants: &ConstantsReport,
    opts: CertificateOptions,
) -> Result<CertificateReport, CampanatoError> {
    let grid = u.grid();
    let f = f.filter(|f| f.defined_nodes().any(|i| f.value(i) != 0.0));
    if let Some(f) = f {
        if **f.grid() != **grid {
            return Err(CampanatoError::GridMismatch);
        }
    }
    let (mode, exponent, radius) = match f {
        None => (
            CertificateMode::Homogeneous,
            constants.pair.alpha_bar,
            grid.radius() / (4.0 * constants.bounds.big_lambda),
        ),
        Some(_) => (CertificateMode::Informational, constants.pair.alpha, 0.5 * grid.radius()),
    };
    let hess = hessian(u)?;
    let nodes: Vec<usize> = subsample_ball(grid, (0.0, 0.0), radius, opts.subsample)
        .into_iter()
        .filter(|&i| hess.get(i).is_some())
        .collect();
    if nodes.len() < MIN_BALL_NODES {
        return Err(CampanatoError::UnderResolved {
            radius,
            nodes: nodes.len(),
        });
    }
    let measured_seminorm = discrete_hessian_seminorm(&hess, &nodes, exponent);
    let u_sup = u.sup_norm();
    let (bound, f_sup, f_seminorm) = match f {
        None => (constants.C1 * Wide::from(u_sup), None, None),
        Some(f) => {
            let f_nodes = subsample_ball(grid, (0.0, 0.0), grid.radius(), opts.subsample);
            let semi = discrete_holder_seminorm(f, &f_nodes, exponent);
            let sup = f.sup_norm();
            let t = Wide::from(sup + semi) / constants.delta + Wide::from(u_sup);
            let factor = Wide::from(holder_factor(exponent) * exponent.exp2());
            (factor * constants.C4 * t, Some(sup), Some(semi))
        }
    };
    let bound = opts.bound_override.unwrap_or(bound);
    Ok(CertificateReport {
        mode,
        exponent,
        radius,
        nodes_used: nodes.len(),
        u_sup,
        f_sup,
        f_seminorm,
        measured_seminorm,
        bound,
        satisfied: Wide::from(measured_seminorm) <= bound,
        constants_used: constants.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{compute_constants, C0Variant, EllipticityBounds, ExternalConstants, HolderPair};
    use crate::grid::Grid2;
    use std::sync::Arc;

    fn constants() -> ConstantsReport {
        compute_constants(
            2,
            EllipticityBounds::unit(),
            HolderPair::new(0.25, 0.5).unwrap(),
            &ExternalConstants::default(),
            C0Variant::Proof,
        )
        .unwrap()
    }

    #[test]
    fn harmonic_cubic_is_certified() {
        let u = GridFunction::from_fn(Arc::new(Grid2::unit_disk(129).unwrap()), |x, y| x * x * x - 3.0 * x * y * y);
        let c = constants();
        let r = certificate_check(&u, None, &c, CertificateOptions::default()).unwrap();
        assert_eq!(r.mode, CertificateMode::Homogeneous);
        assert!(r.measured_seminorm > 0.0);
        assert!(r.satisfied);
        let forced = CertificateOptions {
            bound_override: Some(Wide::ZERO),
            ..Default::default()
        };
        assert!(!certificate_check(&u, None, &c, forced).unwrap().satisfied);
    }

    #[test]
    fn quadratic_measures_zero() {
        let u = GridFunction::from_fn(Arc::new(Grid2::unit_disk(65).unwrap()), |x, y| x * x - y * y + 0.5 * x * y);
        let r = certificate_check(&u, None, &constants(), CertificateOptions::default()).unwrap();
        assert!(r.measured_seminorm < 1e-8 && r.satisfied);
    }

    #[test]
    fn coarse_grid_is_under_resolved() {
        let u = GridFunction::from_fn(Arc::new(Grid2::unit_disk(17).unwrap()), |x, _| x * x * x);
        let b = EllipticityBounds::new(1.0, 4.0).unwrap();
        let c = compute_constants(2, b, HolderPair::new(0.25, 0.5).unwrap(), &ExternalConstants::default(), C0Variant::Proof)
            .unwrap();
        let err = certificate_check(&u, None, &c, CertificateOptions::default()).unwrap_err();
        assert!(matches!(err, CampanatoError::UnderResolved { .. }));
    }

    #[test]
    fn nonzero_rhs_is_informational() {
        let g = Arc::new(Grid2::unit_disk(65).unwrap());
        let u = GridFunction::from_fn(g.clone(), |x, y| x * x * x + y * y);
        let f = GridFunction::from_fn(g, |x, _| 6.0 * x + 2.0);
        let r = certificate_check(&u, Some(&f), &constants(), CertificateOptions::default()).unwrap();
        assert_eq!(r.mode, CertificateMode::Informational);
        assert!(r.f_seminorm.unwrap() > 0.0);
    }
}
