//! Small dense 2x2 matrices.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

/// Symmetric 2x2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Default)]
pub struct SymmetricMatrix2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

/// General 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Matrix2(pub [[f64; 2]; 2]);

/// Orthonormal eigen-decomposition `v_hi v_hi^T l_hi + v_lo v_lo^T l_lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen2 {
    pub lo: f64,
    pub hi: f64,
    /// Unit eigenvector of `hi`; the eigenvector of `lo` is its rotation by 90 degrees.
    pub v_hi: [f64; 2],
}

impl SymmetricMatrix2 {
    pub const ZERO: SymmetricMatrix2 = SymmetricMatrix2 {
        m11: 0.0,
        m12: 0.0,
        m22: 0.0,
    };
    pub const IDENTITY: SymmetricMatrix2 = SymmetricMatrix2 {
        m11: 1.0,
        m12: 0.0,
        m22: 1.0,
    };

    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        SymmetricMatrix2 { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymmetricMatrix2::new(a, 0.0, b)
    }

    pub fn scaled(self, s: f64) -> Self {
        SymmetricMatrix2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn trace(self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    /// Frobenius inner product `tr(self * other)`.
    pub fn dot(self, other: SymmetricMatrix2) -> f64 {
        self.m11 * other.m11 + 2.0 * self.m12 * other.m12 + self.m22 * other.m22
    }

    pub fn frobenius_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn frobenius(self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }

    pub fn eigen(self) -> Eigen2 {
        let mean = 0.5 * (self.m11 + self.m22);
        let half_gap = 0.5 * (self.m11 - self.m22);
        let rad = half_gap.hypot(self.m12);
        let (lo, hi) = if mean >= 0.0 {
            let hi = mean + rad;
            let lo = if hi != 0.0 { self.det() / hi } else { mean - rad };
            (lo, hi)
        } else {
            let lo = mean - rad;
            (lo, self.det() / lo)
        };
        let v_hi = if self.m12 == 0.0 {
            if self.m11 >= self.m22 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        } else {
            let theta = 0.5 * (2.0 * self.m12).atan2(self.m11 - self.m22);
            [theta.cos(), theta.sin()]
        };
        Eigen2 {
            lo: lo.min(hi),
            hi: hi.max(lo),
            v_hi,
        }
    }

    pub fn eigenvalues(self) -> (f64, f64) {
        let e = self.eigen();
        (e.lo, e.hi)
    }

    pub fn op_norm(self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn nuclear_norm(self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs() + hi.abs()
    }

    /// `f(self)` through the eigen-decomposition.
    pub fn map_spectrum(self, f: impl Fn(f64) -> f64) -> SymmetricMatrix2 {
        let e = self.eigen();
        let [c, s] = e.v_hi;
        let (fh, fl) = (f(e.hi), f(e.lo));
        SymmetricMatrix2::new(
            fh * c * c + fl * s * s,
            (fh - fl) * c * s,
            fh * s * s + fl * c * c,
        )
    }

    /// `a * self * a^T`.
    pub fn congruence(self, a: Matrix2) -> SymmetricMatrix2 {
        let [[a11, a12], [a21, a22]] = a.0;
        // b = a * self
        let b11 = a11 * self.m11 + a12 * self.m12;
        let b12 = a11 * self.m12 + a12 * self.m22;
        let b21 = a21 * self.m11 + a22 * self.m12;
        let b22 = a21 * self.m12 + a22 * self.m22;
        SymmetricMatrix2::new(
            b11 * a11 + b12 * a12,
            0.5 * ((b11 * a21 + b12 * a22) + (b21 * a11 + b22 * a12)),
            b21 * a21 + b22 * a22,
        )
    }

    pub fn to_matrix(self) -> Matrix2 {
        Matrix2([[self.m11, self.m12], [self.m12, self.m22]])
    }
}

impl Add for SymmetricMatrix2 {
    type Output = SymmetricMatrix2;
    fn add(self, o: SymmetricMatrix2) -> SymmetricMatrix2 {
        SymmetricMatrix2::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }
}

impl Sub for SymmetricMatrix2 {
    type Output = SymmetricMatrix2;
    fn sub(self, o: SymmetricMatrix2) -> SymmetricMatrix2 {
        SymmetricMatrix2::new(self.m11 - o.m11, self.m12 - o.m12, self.m22 - o.m22)
    }
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn transpose(self) -> Matrix2 {
        let [[a, b], [c, d]] = self.0;
        Matrix2([[a, c], [b, d]])
    }

    pub fn det(self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    /// Largest singular value.
    pub fn op_norm(self) -> f64 {
        SymmetricMatrix2::new(
            self.0[0][0].powi(2) + self.0[1][0].powi(2),
            self.0[0][0] * self.0[0][1] + self.0[1][0] * self.0[1][1],
            self.0[0][1].powi(2) + self.0[1][1].powi(2),
        )
        .eigenvalues()
        .1
        .sqrt()
    }

    pub fn max_abs_diff(self, other: Matrix2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        let a = self.0;
        let b = o.0;
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Matrix2(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn eigenvalues_of_simple_matrices() {
        assert_eq!(SymmetricMatrix2::diag(3.0, -1.0).eigenvalues(), (-1.0, 3.0));
        let (lo, hi) = SymmetricMatrix2::new(2.0, 1.0, 2.0).eigenvalues();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        assert_eq!(SymmetricMatrix2::new(1.0, 0.0, -1.0).nuclear_norm(), 2.0);
    }

    #[test]
    fn spectral_map_reconstructs_and_inverts() {
        let mut rng = CounterRng::new(3);
        for _ in 0..200 {
            let m = SymmetricMatrix2::new(rng.range(0.5, 4.0), rng.symmetric(1.0), rng.range(0.5, 4.0));
            let m = m + SymmetricMatrix2::IDENTITY.scaled(m.op_norm());
            let back = m.map_spectrum(|x| x);
            assert!((back - m).op_norm() < 1e-13 * m.op_norm());
            let r = m.map_spectrum(|x| 1.0 / x.sqrt());
            let prod = m.congruence(r.to_matrix());
            assert!((prod - SymmetricMatrix2::IDENTITY).op_norm() < 1e-13);
        }
    }

    #[test]
    fn congruence_matches_explicit_product() {
        let s = SymmetricMatrix2::new(1.5, -0.25, 0.75);
        let a = Matrix2([[1.0, 2.0], [-0.5, 3.0]]);
        let full = a * s.to_matrix() * a.transpose();
        let c = s.congruence(a).to_matrix();
        assert!(full.max_abs_diff(c) < 1e-14);
    }
}
