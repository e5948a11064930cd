//! Named closed-form fields used as boundary data, right-hand sides and test inputs.

use std::fmt;
use std::str::FromStr;

/// A scalar field on the plane given by name, e.g. `harmonic-cubic` or
/// `quadratic:0,0,0,1,0,-1`.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldExpr {
    Zero,
    Const(f64),
    /// `a + b1 x + b2 y + (c11 x^2 + 2 c12 x y + c22 y^2) / 2`
    Quadratic([f64; 6]),
    /// `x^3 - 3 x y^2`
    HarmonicCubic,
    /// `e^x cos y`
    ExpCos,
    /// `x^4`
    Quartic,
    /// `sin x sin y`
    SinSin,
    /// `|x|^p`
    RadialPower(f64),
    /// `|x|^p cos(2 theta)`
    RadialCos(f64),
}

impl FieldExpr {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            FieldExpr::Zero => 0.0,
            FieldExpr::Const(c) => c,
            FieldExpr::Quadratic([a, b1, b2, c11, c12, c22]) => {
                a + b1 * x + b2 * y + 0.5 * (c11 * x * x + 2.0 * c12 * x * y + c22 * y * y)
            }
            FieldExpr::HarmonicCubic => x * x * x - 3.0 * x * y * y,
            FieldExpr::ExpCos => x.exp() * y.cos(),
            FieldExpr::Quartic => x.powi(4),
            FieldExpr::SinSin => x.sin() * y.sin(),
            FieldExpr::RadialPower(p) => {
                let r = x.hypot(y);
                if r == 0.0 {
                    0.0
                } else {
                    r.powf(p)
                }
            }
            FieldExpr::RadialCos(p) => {
                let r2 = x * x + y * y;
                if r2 == 0.0 {
                    0.0
                } else {
                    r2.sqrt().powf(p - 2.0) * (x * x - y * y)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldExpr::Zero) || *self == FieldExpr::Const(0.0)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Zero => write!(f, "zero"),
            FieldExpr::Const(c) => write!(f, "const:{c}"),
            FieldExpr::Quadratic(q) => {
                let parts: Vec<String> = q.iter().map(|v| v.to_string()).collect();
                write!(f, "quadratic:{}", parts.join(","))
            }
            FieldExpr::HarmonicCubic => write!(f, "harmonic-cubic"),
            FieldExpr::ExpCos => write!(f, "exp-cos"),
            FieldExpr::Quartic => write!(f, "quartic"),
            FieldExpr::SinSin => write!(f, "sin-sin"),
            FieldExpr::RadialPower(p) => write!(f, "radial-power:{p}"),
            FieldExpr::RadialCos(p) => write!(f, "radial-cos:{p}"),
        }
    }
}

fn numbers(s: &str, count: usize, name: &str) -> Result<Vec<f64>, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == count && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(format!("field '{name}' expects {count} comma-separated numbers, got '{s}'")),
    }
}

impl FromStr for FieldExpr {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let need = |count: usize| -> Result<Vec<f64>, String> {
            numbers(args.ok_or_else(|| format!("field '{name}' needs parameters"))?, count, name)
        };
        let plain = |e: FieldExpr| -> Result<FieldExpr, String> {
            match args {
                None => Ok(e),
                Some(_) => Err(format!("field '{name}' takes no parameters")),
            }
        };
        match name {
            "zero" => plain(FieldExpr::Zero),
            "const" => Ok(FieldExpr::Const(need(1)?[0])),
            "quadratic" => {
                let v = need(6)?;
                Ok(FieldExpr::Quadratic([v[0], v[1], v[2], v[3], v[4], v[5]]))
            }
            "harmonic-cubic" => plain(FieldExpr::HarmonicCubic),
            "exp-cos" => plain(FieldExpr::ExpCos),
            "quartic" => plain(FieldExpr::Quartic),
            "sin-sin" => plain(FieldExpr::SinSin),
            "radial-power" => Ok(FieldExpr::RadialPower(need(1)?[0])),
            "radial-cos" => Ok(FieldExpr::RadialCos(need(1)?[0])),
            other => Err(format!(
                "unknown field '{other}' (expected zero, const:c, quadratic:a,b1,b2,c11,c12,c22, \
                 harmonic-cubic, exp-cos, quartic, sin-sin, radial-power:p, radial-cos:p)"
            )),
        }
    }
}
