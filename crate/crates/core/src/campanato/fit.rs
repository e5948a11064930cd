use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{CampanatoError, MIN_FIT_NODES};
use crate::grid::GridFunction;
use crate::matrix::SymmetricMatrix2;

/// `P(z) = a + b.z + z^T c z / 2` in coordinates local to some centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Default)]
pub struct QuadraticPolynomial {
    pub a: f64,
    pub b: [f64; 2],
    pub c: SymmetricMatrix2,
}

impl QuadraticPolynomial {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let c = self.c;
        self.a + self.b[0] * x + self.b[1] * y + 0.5 * (c.m11 * x * x + 2.0 * c.m12 * x * y + c.m22 * y * y)
    }

    /// `amp * P(z / s)`, expressed as a polynomial in `z`.
    pub fn pulled_back(&self, s: f64, amp: f64) -> QuadraticPolynomial {
        QuadraticPolynomial {
            a: amp * self.a,
            b: [amp * self.b[0] / s, amp * self.b[1] / s],
            c: self.c.scaled(amp / (s * s)),
        }
    }

    pub fn add(&self, o: &QuadraticPolynomial) -> QuadraticPolynomial {
        QuadraticPolynomial {
            a: self.a + o.a,
            b: [self.b[0] + o.b[0], self.b[1] + o.b[1]],
            c: self.c + o.c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub poly: QuadraticPolynomial,
    /// `max |u - P|` over the fitted nodes.
    pub sup_dev: f64,
    pub nodes: usize,
}

/// Least-squares quadratic through `(x, y, value)` samples.
///
/// Coordinates are divided by `scale` before the fit (Householder QR on the
/// design matrix) so the system is well conditioned at every radius.
pub fn fit_points(points: &[(f64, f64, f64)], scale: f64) -> Result<QuadraticPolynomial, CampanatoError> {
    if points.len() < MIN_FIT_NODES {
        return Err(CampanatoError::InsufficientNodes { found: points.len() });
    }
    let m = points.len();
    let design = DMatrix::from_fn(m, 6, |i, j| {
        let (x, y) = (points[i].0 / scale, points[i].1 / scale);
        match j {
            0 => 1.0,
            1 => x,
            2 => y,
            3 => 0.5 * x * x,
            4 => x * y,
            _ => 0.5 * y * y,
        }
    });
    let mut rhs = DVector::from_fn(m, |i, _| points[i].2);
    let qr = design.qr();
    let r = qr.r();
    let diag_max = (0..6).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..6).any(|i| !(r[(i, i)].abs() > 1e-10 * diag_max)) {
        return Err(CampanatoError::Degenerate);
    }
    qr.q_tr_mul(&mut rhs);
    let mut beta = [0.0; 6];
    for i in (0..6).rev() {
        let mut s = rhs[i];
        for (j, bj) in beta.iter().enumerate().skip(i + 1) {
            s -= r[(i, j)] * bj;
        }
        beta[i] = s / r[(i, i)];
    }
    let s2 = scale * scale;
    Ok(QuadraticPolynomial {
        a: beta[0],
        b: [beta[1] / scale, beta[2] / scale],
        c: SymmetricMatrix2::new(beta[3] / s2, beta[4] / s2, beta[5] / s2),
    })
}

/// Fits `u` over the defined nodes of the closed ball; the polynomial is in
/// coordinates relative to `center`.
pub fn fit_quadratic(u: &GridFunction, center: (f64, f64), r: f64) -> Result<QuadraticFit, CampanatoError> {
    let grid = u.grid();
    let points: Vec<(f64, f64, f64)> = grid
        .nodes_in_ball(center, r)
        .into_iter()
        .filter(|&i| u.is_defined(i))
        .map(|i| {
            let (x, y) = grid.coord(i);
            (x - center.0, y - center.1, u.value(i))
        })
        .collect();
    let poly = fit_points(&points, r)?;
    let sup_dev = points
        .iter()
        .map(|&(x, y, v)| (v - poly.eval(x, y)).abs())
        .fold(0.0, f64::max);
    Ok(QuadraticFit {
        poly,
        sup_dev,
        nodes: points.len(),
    })
}

/// Discrete Taylor polynomial at a node: value, central first differences and
/// the stencil Hessian, in coordinates relative to the node.
pub fn taylor_at_node(u: &GridFunction, idx: usize) -> Result<QuadraticPolynomial, CampanatoError> {
    let grid = u.grid();
    let n = grid.n();
    let (row, col) = grid.row_col(idx);
    let ok = row > 0
        && col > 0
        && row + 1 < n
        && col + 1 < n
        && (0..3).all(|dr| (0..3).all(|dc| u.is_defined((row + dr - 1) * n + col + dc - 1)));
    if !ok {
        return Err(CampanatoError::NoTaylor { row, col });
    }
    let v = u.values();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let c = SymmetricMatrix2::new(
        (v[idx + 1] - 2.0 * v[idx] + v[idx - 1]) * inv_h2,
        (v[idx + n + 1] - v[idx + n - 1] - v[idx - n + 1] + v[idx - n - 1]) * 0.25 * inv_h2,
        (v[idx + n] - 2.0 * v[idx] + v[idx - n]) * inv_h2,
    );
    Ok(QuadraticPolynomial {
        a: v[idx],
        b: [(v[idx + 1] - v[idx - 1]) / (2.0 * h), (v[idx + n] - v[idx - n]) / (2.0 * h)],
        c,
    })
}
