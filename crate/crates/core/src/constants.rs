//! Explicit universal constants of the C^{2,α} regularity argument and the
//! inequality chain that ties them together.
//!
//! Most constants are astronomically small or large, so they are carried as
//! [`Wide`] values. Every tight construction (closeness constant, decay ratio
//! `mu`, small-datum threshold `delta`) is equal to its bound in exact
//! arithmetic; after rounding, the chosen value is stepped down one ulp at a
//! time until the literal floating-point comparison holds.

use serde::Serialize;
use thiserror::Error;

use crate::wide::Wide;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("{0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> ConstantsError {
    ConstantsError::Domain(msg.into())
}

/// Lower and upper ellipticity constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticityBounds {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl EllipticityBounds {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self, ConstantsError> {
        if !(lambda > 0.0 && lambda.is_finite() && big_lambda.is_finite() && lambda <= big_lambda) {
            return Err(domain(format!(
                "ellipticity bounds must satisfy 0 < lambda <= Lambda, got lambda={lambda}, Lambda={big_lambda}"
            )));
        }
        Ok(EllipticityBounds { lambda, big_lambda })
    }

    pub fn unit() -> Self {
        EllipticityBounds {
            lambda: 1.0,
            big_lambda: 1.0,
        }
    }

    /// Bounds after normalizing the linear part to the identity.
    pub fn normalized(self) -> Self {
        EllipticityBounds {
            lambda: self.lambda / self.big_lambda,
            big_lambda: self.big_lambda / self.lambda,
        }
    }
}

/// Target exponent `alpha` below the homogeneous exponent `alpha_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderPair {
    pub alpha: f64,
    pub alpha_bar: f64,
}

impl HolderPair {
    pub fn new(alpha: f64, alpha_bar: f64) -> Result<Self, ConstantsError> {
        check_alpha_bar(alpha_bar)?;
        if !(alpha > 0.0 && alpha < alpha_bar) {
            return Err(domain(format!(
                "alpha must satisfy 0 < alpha < alpha_bar, got alpha={alpha}, alpha_bar={alpha_bar}"
            )));
        }
        Ok(HolderPair { alpha, alpha_bar })
    }
}

/// Constants taken from cited results that have no closed form here.
#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExternalConstants {
    /// Interior Hölder estimate constant.
    pub K1: f64,
    /// Interior Hölder estimate exponent.
    pub alpha0: f64,
    /// Boundary C² estimate constant for harmonic functions.
    pub Cprime: f64,
    /// Mollifier third-derivative mass constant.
    pub K2: f64,
    /// Approximation constant for the inhomogeneous problem.
    pub C3: f64,
}

impl Default for ExternalConstants {
    fn default() -> Self {
        ExternalConstants {
            K1: 1.0,
            alpha0: 0.1,
            Cprime: 1.0,
            K2: 1.0,
            C3: 1.0,
        }
    }
}

impl ExternalConstants {
    pub fn validate(&self) -> Result<(), ConstantsError> {
        for (name, v) in [("K1", self.K1), ("Cprime", self.Cprime), ("K2", self.K2), ("C3", self.C3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(domain(format!("alpha0 must lie in (0,1], got {}", self.alpha0)));
        }
        Ok(())
    }
}

/// Which of the two closed forms of `C0` feeds `C1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum C0Variant {
    /// `1 + n + (25/4) n^2 + (1/(2 lambda)) eps (25/4) n^2`, the form carried through the estimate chain.
    #[default]
    Proof,
    /// `1 + n + 4 n^2 + (1/lambda) eps (25/8) n^(5/2)`, the alternative closed form.
    Statement,
}

impl std::str::FromStr for C0Variant {
    type Err = ConstantsError;
    fn from_str(s: &str) -> Result<Self, ConstantsError> {
        match s {
            "proof" => Ok(C0Variant::Proof),
            "statement" => Ok(C0Variant::Statement),
            other => Err(domain(format!(
                "unknown C0 variant '{other}' (expected 'proof' or 'statement')"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCheck {
    pub name: String,
    pub satisfied: bool,
    /// Right-hand side minus left-hand side.
    pub slack: Wide,
    pub lhs: Wide,
    pub rhs: Wide,
}

/// Every constant for one parameter set, with the inputs that produced it.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub n: u32,
    pub bounds: EllipticityBounds,
    pub pair: HolderPair,
    pub external: ExternalConstants,
    pub c0_variant: C0Variant,
    pub r0: Wide,
    pub eps0_tilde: Wide,
    pub eps0: Wide,
    pub C0: f64,
    pub C0_statement_variant: f64,
    pub C0_prime: Wide,
    pub C1_tilde: Wide,
    pub C1: Wide,
    pub gamma: Wide,
    pub mu: Wide,
    pub delta: Wide,
    pub delta_inverse: Wide,
    pub C4: Wide,
    pub omega_n: f64,
    pub chain_checks: Vec<ChainCheck>,
}

impl ConstantsReport {
    pub fn all_satisfied(&self) -> bool {
        self.chain_checks.iter().all(|c| c.satisfied)
    }
}

fn check_n(n: u32) -> Result<(), ConstantsError> {
    if n < 1 {
        return Err(domain("dimension n must be at least 1"));
    }
    Ok(())
}

fn check_alpha_bar(alpha_bar: f64) -> Result<(), ConstantsError> {
    if !(alpha_bar > 0.0 && alpha_bar < 1.0) {
        return Err(domain(format!("alpha_bar must lie in (0,1), got {alpha_bar}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), ConstantsError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `3 / (250 n^3)`.
fn base(n: u32) -> f64 {
    3.0 / (250.0 * (n as f64).powi(3))
}

/// Volume of the unit ball in `R^n`.
pub fn omega_n(n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => omega_n(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Scale at which the homogeneous approximation step is taken:
/// `(3/(250 n^3))^(1/(1-alpha_bar))`.
pub fn r0(n: u32, alpha_bar: f64) -> Result<Wide, ConstantsError> {
    check_n(n)?;
    check_alpha_bar(alpha_bar)?;
    Ok(Wide::from(base(n)).powf(1.0 / (1.0 - alpha_bar)))
}

/// Mollification radius `((r0^(2+alpha_bar)/4) / K1)^(1/alpha0)`.
pub fn gamma_moll(r0_val: Wide, alpha_bar: f64, k1: f64, alpha0: f64) -> Result<Wide, ConstantsError> {
    if !r0_val.is_sign_positive() || !(k1 > 0.0) {
        return Err(domain("gamma requires r0 > 0 and K1 > 0"));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(domain(format!("alpha0 must lie in (0,1], got {alpha0}")));
    }
    check_alpha_bar(alpha_bar)?;
    let quarter = r0_val.powf(2.0 + alpha_bar) * Wide::from(0.25);
    Ok((quarter / Wide::from(k1)).powf(1.0 / alpha0))
}

/// The two branches of the closeness constant, before taking the minimum.
pub fn eps0_tilde_branches(
    n: u32,
    lambda: f64,
    alpha_bar: f64,
    ext: &ExternalConstants,
) -> Result<(Wide, Wide), ConstantsError> {
    check_n(n)?;
    check_alpha_bar(alpha_bar)?;
    check_lambda(lambda)?;
    ext.validate()?;
    let nf = n as f64;
    let b = Wide::from(base(n));
    let branch1 = Wide::from(lambda * 2.0 / (25.0 * nf * nf)) * b.powf(alpha_bar / (1.0 - alpha_bar));
    let a0 = ext.alpha0;
    let branch2 = Wide::from(0.5).powf(1.0 + 6.0 / a0)
        * Wide::from(lambda / ext.K2)
        * Wide::from(ext.K1).powf(-3.0 / a0)
        * b.powf((2.0 + alpha_bar) * (1.0 + 3.0 / a0) / (1.0 - alpha_bar));
    Ok((branch1, branch2))
}

/// Upper cap on the closeness constant from the first approximation bound.
fn eps_cap_sides(n: u32, lambda: f64, alpha_bar: f64, r0_val: Wide, eps: Wide) -> (Wide, Wide) {
    let nf = n as f64;
    let rhs = Wide::from(lambda / 2.0) * r0_val.powf(alpha_bar) / Wide::from(6.25 * nf * nf);
    (eps, rhs)
}

/// Mollification error plus third-derivative error against `r0^(2+alpha_bar)/2`.
fn mollified_closeness_sides(
    lambda: f64,
    alpha_bar: f64,
    ext: &ExternalConstants,
    r0_val: Wide,
    gamma: Wide,
    eps: Wide,
) -> (Wide, Wide) {
    let lhs = Wide::from(ext.K1) * gamma.powf(ext.alpha0)
        + eps / Wide::from(2.0 * lambda) * Wide::from(ext.K2) / gamma.powi(3);
    let rhs = Wide::from(0.5) * r0_val.powf(2.0 + alpha_bar);
    (lhs, rhs)
}

/// Largest value found below `x` that satisfies `ok`: single ULP steps first,
/// then relative decrements that double until the rounding defect is covered.
fn step_down_until(x: Wide, ok: impl Fn(Wide) -> bool) -> Wide {
    let mut y = x;
    for _ in 0..16 {
        if ok(y) {
            return y;
        }
        y = y.next_below();
    }
    let mut t = f64::EPSILON;
    while t < 0.5 {
        let y = x * Wide::from(1.0 - t);
        if ok(y) {
            return y;
        }
        t *= 2.0;
    }
    x * Wide::from(0.5)
}

/// Closeness constant: the smaller branch, adjusted so that both derived
/// inequalities hold literally in floating point.
pub fn eps0_tilde(n: u32, lambda: f64, alpha_bar: f64, ext: &ExternalConstants) -> Result<Wide, ConstantsError> {
    let (b1, b2) = eps0_tilde_branches(n, lambda, alpha_bar, ext)?;
    let r = r0(n, alpha_bar)?;
    let g = gamma_moll(r, alpha_bar, ext.K1, ext.alpha0)?;
    Ok(step_down_until(b1.min(b2), |e| {
        let (l1, r1) = eps_cap_sides(n, lambda, alpha_bar, r, e);
        let (l2, r2) = mollified_closeness_sides(lambda, alpha_bar, ext, r, g, e);
        l1 <= r1 && l2 <= r2
    }))
}

/// Closeness constant for an operator with bounds `(lambda, Lambda)`:
/// the normalized value at `(lambda/Lambda, Lambda/lambda)` divided by `Lambda`.
pub fn eps0(n: u32, bounds: EllipticityBounds, alpha_bar: f64, ext: &ExternalConstants) -> Result<Wide, ConstantsError> {
    EllipticityBounds::new(bounds.lambda, bounds.big_lambda)?;
    let scaled = bounds.normalized();
    Ok(eps0_tilde(n, scaled.lambda, alpha_bar, ext)? / Wide::from(bounds.big_lambda))
}

/// Approximation constant `C0` in the requested form.
pub fn c0_variant(n: u32, lambda: f64, eps0_tilde_val: f64, variant: C0Variant) -> Result<f64, ConstantsError> {
    check_n(n)?;
    check_lambda(lambda)?;
    if !(eps0_tilde_val >= 0.0) {
        return Err(domain("closeness constant must be non-negative"));
    }
    let nf = n as f64;
    Ok(match variant {
        C0Variant::Proof => 1.0 + nf + 6.25 * nf * nf + eps0_tilde_val / (2.0 * lambda) * 6.25 * nf * nf,
        C0Variant::Statement => 1.0 + nf + 4.0 * nf * nf + eps0_tilde_val / lambda * 3.125 * nf.powf(2.5),
    })
}

/// `C0` in the form carried through the estimate chain.
pub fn c0(n: u32, lambda: f64, eps0_tilde_val: f64) -> Result<f64, ConstantsError> {
    c0_variant(n, lambda, eps0_tilde_val, C0Variant::Proof)
}

/// `(2 + 2^(2+alpha))^2`, the pointwise-to-uniform Hölder factor.
pub fn holder_factor(alpha: f64) -> f64 {
    (2.0 + (2.0 + alpha).exp2()).powi(2)
}

fn c0_prime_from(c0_val: f64, r0_val: Wide, alpha_bar: f64) -> Wide {
    let r_pow = r0_val.powf(alpha_bar).to_f64();
    Wide::from(c0_val * (1.0 + 3.0 / (1.0 - r_pow))) / r0_val.powf(1.0 + alpha_bar)
}

/// `(C0', C1~, C1)`.
pub fn c1_chain(
    n: u32,
    bounds: EllipticityBounds,
    alpha_bar: f64,
    ext: &ExternalConstants,
    variant: C0Variant,
) -> Result<(Wide, Wide, Wide), ConstantsError> {
    EllipticityBounds::new(bounds.lambda, bounds.big_lambda)?;
    let r = r0(n, alpha_bar)?;
    let eps = eps0_tilde(n, bounds.lambda, alpha_bar, ext)?;
    let c0_val = c0(n, bounds.lambda, eps.to_f64())?;
    let tail = Wide::from(alpha_bar.exp2() * holder_factor(alpha_bar));
    let c0p = c0_prime_from(c0_val, r, alpha_bar);
    let c1t = c0p * tail;

    let scaled = bounds.normalized();
    let eps_scaled = eps0_tilde(n, scaled.lambda, alpha_bar, ext)?;
    let c0_scaled = c0_variant(n, scaled.lambda, eps_scaled.to_f64(), variant)?;
    let c1 = Wide::from(bounds.big_lambda).powf(2.0 + alpha_bar) * c0_prime_from(c0_scaled, r, alpha_bar) * tail;
    Ok((c0p, c1t, c1))
}

fn decay_sides(c1: Wide, pair: HolderPair, mu: Wide) -> (Wide, Wide) {
    (Wide::from(2.0) * c1 * mu.powf(pair.alpha_bar), mu.powf(pair.alpha))
}

fn ratio_sides(pair: HolderPair, mu: Wide) -> (Wide, Wide) {
    (mu.powf(pair.alpha), Wide::from(3.0 / 7.0))
}

fn delta_sides(c1: Wide, pair: HolderPair, n: u32, c3: f64, mu: Wide, delta: Wide) -> (Wide, Wide) {
    let w = omega_n(n).powf(1.0 / n as f64);
    (Wide::from(w * c3) * delta, c1 * mu.powf(2.0 + pair.alpha_bar))
}

/// `(mu, delta, C4)` for the inhomogeneous iteration.
pub fn iteration_params(
    c1: Wide,
    alpha: f64,
    alpha_bar: f64,
    n: u32,
    c3: f64,
) -> Result<(Wide, Wide, Wide), ConstantsError> {
    let pair = HolderPair::new(alpha, alpha_bar)?;
    check_n(n)?;
    if !c1.is_sign_positive() || !(c3 > 0.0) {
        return Err(domain("C1 and C3 must be positive"));
    }
    let first = (Wide::from(2.0) * c1).powf(-1.0 / (alpha_bar - alpha));
    let second = Wide::from(3.0 / 7.0).powf(1.0 / alpha);
    let mu = step_down_until(first.min(second), |m| {
        let (l1, r1) = decay_sides(c1, pair, m);
        let (l2, r2) = ratio_sides(pair, m);
        l1 <= r1 && l2 <= r2
    });
    let w = omega_n(n).powf(1.0 / n as f64);
    let delta0 = c1 * mu.powf(2.0 + alpha_bar) / Wide::from(w * c3);
    let delta = step_down_until(delta0, |d| {
        let (l, r) = delta_sides(c1, pair, n, c3, mu, d);
        l <= r
    });
    let c4 = Wide::ONE + Wide::from(3.0) * c1 / (Wide::ONE - mu.powf(alpha));
    Ok((mu, delta, c4))
}

fn check(name: &str, (lhs, rhs): (Wide, Wide)) -> ChainCheck {
    ChainCheck {
        name: name.to_string(),
        satisfied: lhs <= rhs,
        slack: rhs - lhs,
        lhs,
        rhs,
    }
}

/// Evaluates every inequality the argument relies on for the values in `report`.
pub fn validate_constraint_chain(
    report: &ConstantsReport,
    ext: &ExternalConstants,
    bounds: EllipticityBounds,
    pair: HolderPair,
) -> Vec<ChainCheck> {
    let fifth = Wide::from(0.2);
    let lt = |name: &str, x: Wide| ChainCheck {
        name: name.to_string(),
        satisfied: x < fifth,
        slack: fifth - x,
        lhs: x,
        rhs: fifth,
    };
    vec![
        lt("r0_below_one_fifth", report.r0),
        lt("gamma_below_one_fifth", report.gamma),
        check(
            "closeness_cap",
            eps_cap_sides(report.n, bounds.lambda, pair.alpha_bar, report.r0, report.eps0_tilde),
        ),
        check(
            "mollified_closeness",
            mollified_closeness_sides(bounds.lambda, pair.alpha_bar, ext, report.r0, report.gamma, report.eps0_tilde),
        ),
        check("mu_decay", decay_sides(report.C1, pair, report.mu)),
        check("mu_ratio", ratio_sides(pair, report.mu)),
        check(
            "delta_choice",
            delta_sides(report.C1, pair, report.n, ext.C3, report.mu, report.delta),
        ),
    ]
}

/// Full report for one parameter set.
pub fn compute_constants(
    n: u32,
    bounds: EllipticityBounds,
    pair: HolderPair,
    ext: &ExternalConstants,
    variant: C0Variant,
) -> Result<ConstantsReport, ConstantsError> {
    check_n(n)?;
    let bounds = EllipticityBounds::new(bounds.lambda, bounds.big_lambda)?;
    let pair = HolderPair::new(pair.alpha, pair.alpha_bar)?;
    ext.validate()?;
    let r = r0(n, pair.alpha_bar)?;
    let eps_t = eps0_tilde(n, bounds.lambda, pair.alpha_bar, ext)?;
    let eps = eps0(n, bounds, pair.alpha_bar, ext)?;
    let c0_val = c0(n, bounds.lambda, eps_t.to_f64())?;
    let c0_stmt = c0_variant(n, bounds.lambda, eps_t.to_f64(), C0Variant::Statement)?;
    let (c0p, c1t, c1) = c1_chain(n, bounds, pair.alpha_bar, ext, variant)?;
    let gamma = gamma_moll(r, pair.alpha_bar, ext.K1, ext.alpha0)?;
    let (mu, delta, c4) = iteration_params(c1, pair.alpha, pair.alpha_bar, n, ext.C3)?;
    let mut report = ConstantsReport {
        n,
        bounds,
        pair,
        external: *ext,
        c0_variant: variant,
        r0: r,
        eps0_tilde: eps_t,
        eps0: eps,
        C0: c0_val,
        C0_statement_variant: c0_stmt,
        C0_prime: c0p,
        C1_tilde: c1t,
        C1: c1,
        gamma,
        mu,
        delta,
        delta_inverse: delta.recip(),
        C4: c4,
        omega_n: omega_n(n),
        chain_checks: Vec::new(),
    };
    report.chain_checks = validate_constraint_chain(&report, ext, bounds, pair);
    Ok(report)
}
