//! Extended-exponent floating point.
//!
//! The explicit constants routinely leave the `f64` exponent range (the
//! closeness constant is around `1e-457` for the default Krylov–Safonov
//! exponent, and the mollification radius cubed is below `1e-440`). [`Wide`]
//! keeps a 53-bit `f64` mantissa and an `i64` binary exponent, so products,
//! quotients and powers keep full double precision at any magnitude.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Serialize, Serializer};

/// A real number `mant * 2^exp` with `|mant|` in `[0.5, 1)`, or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wide {
    mant: f64,
    exp: i64,
}

// Largest |exponent| passed to ldexp; anything beyond saturates anyway.
const LDEXP_CLAMP: i64 = 4000;

impl Wide {
    pub const ZERO: Wide = Wide { mant: 0.0, exp: 0 };
    pub const ONE: Wide = Wide { mant: 0.5, exp: 1 };

    fn normalized(mant: f64, exp: i64) -> Wide {
        if mant == 0.0 || !mant.is_finite() {
            return Wide {
                mant,
                exp: if mant == 0.0 { 0 } else { exp },
            };
        }
        let (m, e) = libm::frexp(mant);
        Wide {
            mant: m,
            exp: exp + e as i64,
        }
    }

    pub fn from_f64(x: f64) -> Wide {
        Wide::normalized(x, 0)
    }

    /// Nearest `f64`; underflows to subnormals/zero and overflows to infinity.
    pub fn to_f64(self) -> f64 {
        if self.mant == 0.0 || !self.mant.is_finite() {
            return self.mant;
        }
        libm::ldexp(self.mant, self.exp.clamp(-LDEXP_CLAMP, LDEXP_CLAMP) as i32)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.mant.is_finite()
    }

    pub fn is_sign_positive(self) -> bool {
        self.mant > 0.0
    }

    pub fn abs(self) -> Wide {
        Wide {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn recip(self) -> Wide {
        Wide::ONE / self
    }

    /// `self^k` by binary exponentiation.
    pub fn powi(self, k: i64) -> Wide {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut base = self;
        let mut acc = Wide::ONE;
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// `self^p` for `self >= 0` (NaN for negative bases).
    ///
    /// Writes `self = m 2^e`; `2^(p e)` is split exactly into integer and
    /// fractional binary exponents with an FMA, so the relative error stays
    /// at a few ulps even when the result exponent is in the thousands.
    pub fn powf(self, p: f64) -> Wide {
        if p == 0.0 || self == Wide::ONE {
            return Wide::ONE;
        }
        if self.mant < 0.0 || p.is_nan() {
            return Wide::from_f64(f64::NAN);
        }
        if self.mant == 0.0 {
            return if p > 0.0 {
                Wide::ZERO
            } else {
                Wide::from_f64(f64::INFINITY)
            };
        }
        // m^p with m in [0.5, 1) stays within [2^-1000, 2^1000] when |p| <= 1000.
        let m_pow = if p.abs() <= 1000.0 {
            Wide::from_f64(self.mant.powf(p))
        } else {
            let pieces = (p.abs() / 1000.0).ceil();
            Wide::from_f64(self.mant.powf(p / pieces)).powi(pieces as i64)
        };
        let e = self.exp as f64;
        let hi = p * e;
        let lo = p.mul_add(e, -hi);
        let whole = hi.floor();
        let frac = (hi - whole) + lo;
        let scale = Wide::normalized(frac.exp2(), whole as i64);
        m_pow * scale
    }

    pub fn sqrt(self) -> Wide {
        self.powf(0.5)
    }

    pub fn ln(self) -> f64 {
        self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    pub fn log10(self) -> f64 {
        self.mant.abs().log10() + self.exp as f64 * std::f64::consts::LOG10_2
    }

    /// The adjacent representable value just below `self`.
    pub fn next_below(self) -> Wide {
        if self.mant == 0.0 {
            return Wide::from_f64(-f64::from_bits(1));
        }
        Wide::normalized(self.mant.next_down(), self.exp)
    }

    pub fn max(self, other: Wide) -> Wide {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Wide) -> Wide {
        if other < self {
            other
        } else {
            self
        }
    }

    fn in_f64_normal_range(self) -> bool {
        self.mant == 0.0 || (-1020..=1023).contains(&self.exp)
    }

    /// Decimal scientific notation with 16 significant digits, valid at any
    /// exponent (e.g. `8.537199261269545e-457`).
    pub fn to_sci(self) -> String {
        if !self.mant.is_finite() {
            return format!("{}", self.mant);
        }
        if self.in_f64_normal_range() {
            return format!("{:e}", self.to_f64());
        }
        let sign = if self.mant < 0.0 { "-" } else { "" };
        let a = self.abs();
        let mut dec = a.log10().floor() as i64;
        let mut digits = (a * Wide::from_f64(10.0).powi(-dec)).to_f64();
        if digits >= 10.0 {
            digits /= 10.0;
            dec += 1;
        } else if digits < 1.0 {
            digits *= 10.0;
            dec -= 1;
        }
        let mut text = format!("{digits:.15}");
        if text.starts_with("10") {
            text = format!("{:.15}", digits / 10.0);
            dec += 1;
        }
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        format!("{sign}{trimmed}e{dec}")
    }
}

impl From<f64> for Wide {
    fn from(x: f64) -> Wide {
        Wide::from_f64(x)
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        Wide::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        Wide::normalized(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        if self.mant == 0.0 {
            return rhs;
        }
        if rhs.mant == 0.0 {
            return self;
        }
        let (big, small) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = big.exp - small.exp;
        if shift > 1100 {
            return big;
        }
        let aligned = libm::ldexp(small.mant, -(shift as i32));
        Wide::normalized(big.mant + aligned, big.exp)
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        self + (-rhs)
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Wide) -> Option<Ordering> {
        if !self.mant.is_finite() || !other.mant.is_finite() {
            return self.to_f64().partial_cmp(&other.to_f64());
        }
        let sign = |w: &Wide| w.mant.partial_cmp(&0.0).unwrap_or(Ordering::Equal);
        match sign(self).cmp(&sign(other)) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        if self.mant == 0.0 {
            return Some(Ordering::Equal);
        }
        let magnitude = self
            .exp
            .cmp(&other.exp)
            .then(self.mant.abs().partial_cmp(&other.mant.abs())?);
        Some(if self.mant > 0.0 {
            magnitude
        } else {
            magnitude.reverse()
        })
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci())
    }
}

/// Serialized as a plain JSON number; values outside the `f64` range are
/// written in decimal scientific notation so no magnitude is lost.
impl Serialize for Wide {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.in_f64_normal_range() && self.mant.is_finite() {
            return serializer.serialize_f64(self.to_f64());
        }
        if !self.mant.is_finite() {
            return serializer.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(self.to_sci())
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn arithmetic_matches_f64_in_range() {
        let a = Wide::from(3.75);
        let b = Wide::from(-0.125);
        assert_eq!((a * b).to_f64(), 3.75 * -0.125);
        assert_eq!((a / b).to_f64(), 3.75 / -0.125);
        assert_eq!((a + b).to_f64(), 3.75 - 0.125);
        assert_eq!((a - b).to_f64(), 3.75 + 0.125);
        assert_eq!(Wide::ONE.to_f64(), 1.0);
    }

    #[test]
    fn powf_beyond_f64_range() {
        // (2.25e-6)^77.5 = 10^(77.5 * log10(2.25e-6))
        let x = Wide::from(2.25e-6).powf(77.5);
        let expected_log10 = 77.5 * 2.25e-6f64.log10();
        assert!((x.log10() - expected_log10).abs() < 1e-12);
        assert_eq!(x.to_f64(), 0.0);
        // round trip back into range
        let back = x.powf(1.0 / 77.5);
        assert!(rel(back.to_f64(), 2.25e-6) < 1e-14);
    }

    #[test]
    fn powf_agrees_with_f64_when_representable() {
        for &(b, p) in &[(0.0015, 2.0), (0.0015, 1.0 / 0.75), (7.0, -3.5), (0.3, 10.0)] {
            let w = Wide::from(b).powf(p).to_f64();
            assert!(rel(w, f64::powf(b, p)) < 4e-16, "{b}^{p}");
        }
        assert_eq!(Wide::from(2.0).powi(-3).to_f64(), 0.125);
    }

    #[test]
    fn ordering_respects_sign_and_magnitude() {
        let tiny = Wide::from(1e-300).powi(3);
        let neg_tiny = -tiny;
        assert!(tiny > Wide::ZERO);
        assert!(neg_tiny < Wide::ZERO);
        assert!(tiny < Wide::from(1e-300));
        assert!(Wide::from(-2.0) < Wide::from(-1.0));
        assert!(tiny.next_below() < tiny);
    }

    #[test]
    fn scientific_text_outside_range() {
        let x = Wide::from(8.5).powi(-500);
        let s = x.to_sci();
        let (m, e) = s.split_once('e').unwrap();
        let expected = -500.0 * 8.5f64.log10();
        assert_eq!(e.parse::<i64>().unwrap(), expected.floor() as i64);
        let mant: f64 = m.parse().unwrap();
        assert!(rel(mant, 10f64.powf(expected - expected.floor())) < 1e-12);
        assert_eq!(Wide::from(2.25e-6).to_sci(), "2.25e-6");
        assert_eq!(serde_json::to_string(&x).unwrap(), s);
    }

    #[test]
    fn addition_far_apart_keeps_larger() {
        let big = Wide::from(1.0);
        let small = Wide::from(1e-300).powi(5);
        assert_eq!(big + small, big);
        assert_eq!((small + small).to_sci(), (small * Wide::from(2.0)).to_sci());
    }
}
