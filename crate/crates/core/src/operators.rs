//! Almost-linear operators `F(M) = tr(W0 M) + eps * psi(M)` on 2x2 symmetric
//! matrices, their audits, and the affine normalization `DF(0) -> I`.
//!
//! The perturbation is `psi(M) = phi(A M A^T) / |A|^2` for a frame matrix `A`
//! (the identity unless the operator came out of [`normalize`]). Every catalog
//! `phi` has `phi(0) = 0`, `D phi(0) = 0`, `|phi(N)| <= |N|` and a gradient
//! range of operator-norm diameter at most one.

use serde::Serialize;
use thiserror::Error;

use crate::constants::EllipticityBounds;
use crate::matrix::{Matrix2, SymmetricMatrix2};
use crate::rng::CounterRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("W0 must be symmetric positive definite (eigenvalues {lo}, {hi})")]
    NotPositiveDefinite { lo: f64, hi: f64 },
    #[error("eps must satisfy 0 <= eps < smallest eigenvalue of W0 ({lambda_min}), got {eps}")]
    EpsTooLarge { eps: f64, lambda_min: f64 },
    #[error("invalid perturbation parameters: {0}")]
    BadParameters(String),
}

/// Catalog of perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    None,
    /// `(s(m11) + s(m22) + s(sqrt2 m12)) / (2 + sqrt2)` with `s(t) = sin t - t`.
    Sine,
    /// `T log cosh(tr(D M) / (2T))`, a smoothed `|tr(D M)| / 2`, i.e. a smooth
    /// maximum of the linear maps `+-D/2`; requires `|D|_op <= 1`, `T > 0`.
    SmoothMax { d: SymmetricMatrix2, temperature: f64 },
}

const SINE_SCALE: f64 = 1.0 / (2.0 + std::f64::consts::SQRT_2);

/// `log cosh x` without overflow.
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Perturbation {
    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Sine => "sine",
            Perturbation::SmoothMax { .. } => "smooth-max",
        }
    }

    /// Parameters as a comma-separated list (empty when there are none).
    pub fn params_text(&self) -> String {
        match self {
            Perturbation::SmoothMax { d, temperature } => {
                format!("{},{},{},{}", d.m11, d.m12, d.m22, temperature)
            }
            _ => String::new(),
        }
    }

    /// Builds a catalog entry from its name and parameter list.
    pub fn from_parts(name: &str, params: &str) -> Result<Perturbation, OperatorError> {
        let params = params.trim();
        let nums: Vec<f64> = if params.is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| OperatorError::BadParameters(format!("'{t}' is not a number")))
                })
                .collect::<Result<_, _>>()?
        };
        let p = match (name, nums.as_slice()) {
            ("none", []) => Perturbation::None,
            ("sine", []) => Perturbation::Sine,
            ("smooth-max", []) => Perturbation::SmoothMax {
                d: SymmetricMatrix2::diag(1.0, -1.0),
                temperature: 0.1,
            },
            ("smooth-max", [d11, d12, d22, t]) => Perturbation::SmoothMax {
                d: SymmetricMatrix2::new(*d11, *d12, *d22),
                temperature: *t,
            },
            ("none" | "sine", _) => {
                return Err(OperatorError::BadParameters(format!("'{name}' takes no parameters")))
            }
            ("smooth-max", _) => {
                return Err(OperatorError::BadParameters(
                    "smooth-max takes 'd11,d12,d22,temperature'".into(),
                ))
            }
            _ => {
                return Err(OperatorError::BadParameters(format!(
                    "unknown perturbation '{name}' (expected none, sine or smooth-max)"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), OperatorError> {
        if let Perturbation::SmoothMax { d, temperature } = self {
            if !(d.is_finite() && d.op_norm() <= 1.0) {
                return Err(OperatorError::BadParameters(format!(
                    "smooth-max needs |D|_op <= 1, got {}",
                    d.op_norm()
                )));
            }
            if !(*temperature > 0.0 && temperature.is_finite()) {
                return Err(OperatorError::BadParameters(format!(
                    "smooth-max temperature must be positive, got {temperature}"
                )));
            }
        }
        Ok(())
    }

    pub fn phi(&self, m: SymmetricMatrix2) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::Sine => {
                let s = |t: f64| t.sin() - t;
                SINE_SCALE * (s(m.m11) + s(m.m22) + s(std::f64::consts::SQRT_2 * m.m12))
            }
            Perturbation::SmoothMax { d, temperature } => {
                temperature * log_cosh(d.dot(m) / (2.0 * temperature))
            }
        }
    }

    /// Gradient of `phi` under the Frobenius pairing.
    pub fn grad(&self, m: SymmetricMatrix2) -> SymmetricMatrix2 {
        match *self {
            Perturbation::None => SymmetricMatrix2::ZERO,
            Perturbation::Sine => {
                let r2 = std::f64::consts::SQRT_2;
                SymmetricMatrix2::new(
                    SINE_SCALE * (m.m11.cos() - 1.0),
                    SINE_SCALE * ((r2 * m.m12).cos() - 1.0) / r2,
                    SINE_SCALE * (m.m22.cos() - 1.0),
                )
            }
            Perturbation::SmoothMax { d, temperature } => {
                d.scaled(0.5 * (d.dot(m) / (2.0 * temperature)).tanh())
            }
        }
    }
}

/// An operator `F(M) = tr(W0 M) + eps * phi(A M A^T) / |A|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorSpec {
    pub w0: SymmetricMatrix2,
    pub eps: f64,
    pub perturbation: Perturbation,
    pub frame: Matrix2,
}

impl OperatorSpec {
    pub fn new(w0: SymmetricMatrix2, eps: f64, perturbation: Perturbation) -> Result<OperatorSpec, OperatorError> {
        let (lo, hi) = w0.eigenvalues();
        if !(w0.is_finite() && lo > 0.0) {
            return Err(OperatorError::NotPositiveDefinite { lo, hi });
        }
        if !(eps >= 0.0 && eps < lo) {
            return Err(OperatorError::EpsTooLarge { eps, lambda_min: lo });
        }
        perturbation.validate()?;
        Ok(OperatorSpec {
            w0,
            eps,
            perturbation,
            frame: Matrix2::IDENTITY,
        })
    }

    /// The Laplacian, `F(M) = tr M`.
    pub fn laplacian() -> OperatorSpec {
        OperatorSpec::new(SymmetricMatrix2::IDENTITY, 0.0, Perturbation::None).expect("identity is elliptic")
    }

    fn frame_sq(&self) -> f64 {
        self.frame.op_norm().powi(2)
    }

    pub fn evaluate(&self, m: SymmetricMatrix2) -> f64 {
        let linear = self.w0.dot(m);
        if self.eps == 0.0 {
            return linear;
        }
        linear + self.eps * self.perturbation.phi(m.congruence(self.frame)) / self.frame_sq()
    }

    /// `DF(M)` under the Frobenius pairing.
    pub fn gradient(&self, m: SymmetricMatrix2) -> SymmetricMatrix2 {
        if self.eps == 0.0 {
            return self.w0;
        }
        let g = self.perturbation.grad(m.congruence(self.frame));
        self.w0 + g.congruence(self.frame.transpose()).scaled(self.eps / self.frame_sq())
    }

    /// `(lambda_eff, Lambda_eff) = (lambda_min(W0) - eps, lambda_max(W0) + sqrt2 eps)`.
    ///
    /// For `P >= 0`, `F(M + P) - F(M)` lies between `lambda_eff tr P` and
    /// `Lambda_eff tr P`.
    pub fn effective_bounds(&self) -> EllipticityBounds {
        let (lo, hi) = self.w0.eigenvalues();
        EllipticityBounds {
            lambda: lo - self.eps,
            big_lambda: hi + self.eps * std::f64::consts::SQRT_2,
        }
    }
}

fn random_symmetric(rng: &mut CounterRng) -> SymmetricMatrix2 {
    // Scales spread over five decades so both the linear and saturated
    // regimes of the perturbation are exercised.
    let scale = 10f64.powf(rng.range(-3.0, 2.0));
    SymmetricMatrix2::new(rng.symmetric(scale), rng.symmetric(scale), rng.symmetric(scale))
}

/// `max |F(N) - tr(W0 N)| / |N|_op` over random symmetric `N`.
pub fn residual_audit(spec: &OperatorSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = CounterRng::new(seed);
    (0..samples)
        .map(|_| {
            let n = random_symmetric(&mut rng);
            let norm = n.op_norm();
            if norm == 0.0 {
                0.0
            } else {
                (spec.evaluate(n) - spec.w0.dot(n)).abs() / norm
            }
        })
        .fold(0.0, f64::max)
}

/// `max |DF(M) - DF(N)|_op` over random pairs.
pub fn derivative_oscillation(spec: &OperatorSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = CounterRng::new(seed);
    (0..samples)
        .map(|_| {
            let m = random_symmetric(&mut rng);
            let n = random_symmetric(&mut rng);
            (spec.gradient(m) - spec.gradient(n)).op_norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizationResult {
    /// Symmetric positive square root of `W0^-1`.
    pub a: SymmetricMatrix2,
    /// `N -> F(A N A)`, whose derivative at zero is the identity.
    pub transformed: OperatorSpec,
    /// `(lambda/Lambda, Lambda/lambda)` from the effective bounds.
    pub new_bounds: EllipticityBounds,
    /// Closeness constant of the transformed operator, `eps |frame A|^2 / |frame|^2`.
    pub new_eps: f64,
    /// The coarser `eps * Lambda`.
    pub coarse_eps_bound: f64,
    pub coarse_bound_holds: bool,
}

pub fn normalize(spec: &OperatorSpec) -> Result<NormalizationResult, OperatorError> {
    let (lo, hi) = spec.w0.eigenvalues();
    if !(lo > 0.0) {
        return Err(OperatorError::NotPositiveDefinite { lo, hi });
    }
    let a = spec.w0.map_spectrum(|l| 1.0 / l.sqrt());
    let am = a.to_matrix();
    let frame = spec.frame * am;
    let new_eps = spec.eps * frame.op_norm().powi(2) / spec.frame.op_norm().powi(2);
    let transformed = OperatorSpec {
        w0: spec.w0.congruence(am),
        eps: new_eps,
        perturbation: spec.perturbation,
        frame,
    };
    let bounds = spec.effective_bounds();
    let coarse = spec.eps * bounds.big_lambda;
    Ok(NormalizationResult {
        a,
        transformed,
        new_bounds: bounds.normalized(),
        new_eps,
        coarse_eps_bound: coarse,
        coarse_bound_holds: new_eps <= coarse,
    })
}

/// Pulls a Hölder seminorm of the normalized solution back to the original
/// variables: multiplies by `Lambda^(2 + alpha_bar)`.
pub fn rescale_hessian_seminorm(seminorm: f64, bounds: EllipticityBounds, alpha_bar: f64) -> f64 {
    seminorm * bounds.big_lambda.powf(2.0 + alpha_bar)
}
