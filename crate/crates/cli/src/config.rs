//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! `auto` marks an optional number left to the program; an empty value marks
//! an absent path. [`RunConfig::canonical`] writes every key in a fixed order
//! and parses back to the same configuration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ellreg_core::constants::{C0Variant, ConstantsError, ExternalConstants};
use ellreg_core::fields::FieldExpr;
use ellreg_core::grid::Shape;
use ellreg_core::SymmetricMatrix2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{source_name}:{line}: {message}")]
pub struct ConfigError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSection {
    pub shape: Shape,
    pub n: usize,
    pub extent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSection {
    pub w0: SymmetricMatrix2,
    pub eps: f64,
    pub perturbation: String,
    pub params: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsSection {
    pub n: u32,
    /// `None` takes the effective bounds of the operator.
    pub lambda: Option<f64>,
    pub big_lambda: Option<f64>,
    pub alpha_bar: f64,
    /// `None` means `alpha_bar / 2`.
    pub alpha: Option<f64>,
    pub external: ExternalConstants,
    pub c0_variant: C0Variant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSection {
    pub boundary: FieldExpr,
    pub rhs: FieldExpr,
    pub rhs_file: Option<String>,
    pub tol: Option<f64>,
    pub max_sweeps: usize,
    pub relaxation: Option<f64>,
    pub out: Option<String>,
    pub summary: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeSection {
    pub input: Option<String>,
    pub rho: f64,
    pub kmax: usize,
    pub gamma: Option<f64>,
    pub subsample: usize,
    pub strict: bool,
    pub out_dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub audit_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSection,
    pub operator: OperatorSection,
    pub constants: ConstantsSection,
    pub solve: SolveSection,
    pub analyze: AnalyzeSection,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSection {
                shape: Shape::Disk,
                n: 129,
                extent: 1.0,
            },
            operator: OperatorSection {
                w0: SymmetricMatrix2::IDENTITY,
                eps: 0.0,
                perturbation: "none".into(),
                params: String::new(),
            },
            constants: ConstantsSection {
                n: 2,
                lambda: None,
                big_lambda: None,
                alpha_bar: 0.5,
                alpha: None,
                external: ExternalConstants::default(),
                c0_variant: C0Variant::Proof,
            },
            solve: SolveSection {
                boundary: FieldExpr::HarmonicCubic,
                rhs: FieldExpr::Zero,
                rhs_file: None,
                tol: None,
                max_sweeps: 1_000_000,
                relaxation: None,
                out: None,
                summary: None,
            },
            analyze: AnalyzeSection {
                input: None,
                rho: 0.5,
                kmax: 4,
                gamma: None,
                subsample: 33,
                strict: false,
                out_dir: None,
            },
            run: RunSection {
                seed: 0,
                audit_samples: 10_000,
            },
        }
    }
}

fn parse<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("invalid value '{v}'"))
}

fn finite(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if !x.is_finite() {
        return Err(format!("value '{v}' is not finite"));
    }
    Ok(x)
}

fn auto(v: &str) -> Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        finite(v).map(Some)
    }
}

fn path(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn matrix(v: &str) -> Result<SymmetricMatrix2, String> {
    let parts: Vec<f64> = v.split(',').map(|t| finite(t.trim())).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok(SymmetricMatrix2::new(*a, *b, *c)),
        _ => Err(format!("expected 'm11,m12,m22', got '{v}'")),
    }
}

fn show_auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

fn show_path(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("")
}

fn variant_name(v: C0Variant) -> &'static str {
    match v {
        C0Variant::Proof => "proof",
        C0Variant::Statement => "statement",
    }
}

pub const SECTIONS: [&str; 6] = ["grid", "operator", "constants", "solve", "analyze", "run"];

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        let ext = &mut self.constants.external;
        match (section, key) {
            ("grid", "shape") => self.grid.shape = v.parse()?,
            ("grid", "n") => self.grid.n = parse(v)?,
            ("grid", "extent") => self.grid.extent = finite(v)?,
            ("operator", "w0") => self.operator.w0 = matrix(v)?,
            ("operator", "eps") => self.operator.eps = finite(v)?,
            ("operator", "perturbation") => self.operator.perturbation = v.to_string(),
            ("operator", "params") => self.operator.params = v.to_string(),
            ("constants", "n") => self.constants.n = parse(v)?,
            ("constants", "lambda") => self.constants.lambda = auto(v)?,
            ("constants", "Lambda") => self.constants.big_lambda = auto(v)?,
            ("constants", "alpha_bar") => self.constants.alpha_bar = finite(v)?,
            ("constants", "alpha") => self.constants.alpha = auto(v)?,
            ("constants", "K1") => ext.K1 = finite(v)?,
            ("constants", "alpha0") => ext.alpha0 = finite(v)?,
            ("constants", "Cprime") => ext.Cprime = finite(v)?,
            ("constants", "K2") => ext.K2 = finite(v)?,
            ("constants", "C3") => ext.C3 = finite(v)?,
            ("constants", "c0_variant") => self.constants.c0_variant = v.parse().map_err(|e: ConstantsError| e.to_string())?,
            ("solve", "boundary") => self.solve.boundary = v.parse()?,
            ("solve", "rhs") => self.solve.rhs = v.parse()?,
            ("solve", "rhs_file") => self.solve.rhs_file = path(v),
            ("solve", "tol") => self.solve.tol = auto(v)?,
            ("solve", "max_sweeps") => self.solve.max_sweeps = parse(v)?,
            ("solve", "relaxation") => self.solve.relaxation = auto(v)?,
            ("solve", "out") => self.solve.out = path(v),
            ("solve", "summary") => self.solve.summary = path(v),
            ("analyze", "input") => self.analyze.input = path(v),
            ("analyze", "rho") => self.analyze.rho = finite(v)?,
            ("analyze", "kmax") => self.analyze.kmax = parse(v)?,
            ("analyze", "gamma") => self.analyze.gamma = auto(v)?,
            ("analyze", "subsample") => self.analyze.subsample = parse(v)?,
            ("analyze", "strict") => self.analyze.strict = boolean(v)?,
            ("analyze", "out_dir") => self.analyze.out_dir = path(v),
            ("run", "seed") => self.run.seed = parse(v)?,
            ("run", "audit_samples") => self.run.audit_samples = parse(v)?,
            _ if !SECTIONS.contains(&section) => return Err(format!("unknown section [{section}]")),
            _ => return Err(format!("unknown key '{key}' in [{section}]")),
        }
        Ok(())
    }

    /// Applies `section.key=value`.
    pub fn set_dotted(&mut self, assignment: &str) -> Result<(), String> {
        let (lhs, v) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected SECTION.KEY=VALUE, got '{assignment}'"))?;
        let (section, key) = lhs
            .trim()
            .split_once('.')
            .ok_or_else(|| format!("expected SECTION.KEY=VALUE, got '{assignment}'"))?;
        self.set(section, key, v.trim())
    }

    /// Parses config text on top of the defaults.
    pub fn parse_text(text: &str, source_name: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| ConfigError {
                source_name: source_name.to_string(),
                line,
                message,
            };
            let content = raw.split_once('#').map_or(raw, |(c, _)| c).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header '{content}'")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', found '{content}'")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| err("key outside of any [section]".into()))?;
            let key = key.trim();
            if !seen.insert((sec.to_string(), key.to_string())) {
                return Err(err(format!("duplicate key '{key}' in [{sec}]")));
            }
            cfg.set(sec, key, value.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        RunConfig::parse_text(&text, &name)
    }

    /// Every key, in a fixed order.
    pub fn canonical(&self) -> String {
        let c = &self.constants;
        let e = &c.external;
        let w = self.operator.w0;
        let mut s = String::new();
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "shape = {}", self.grid.shape.name());
        let _ = writeln!(s, "n = {}", self.grid.n);
        let _ = writeln!(s, "extent = {}", self.grid.extent);
        let _ = writeln!(s, "\n[operator]");
        let _ = writeln!(s, "w0 = {},{},{}", w.m11, w.m12, w.m22);
        let _ = writeln!(s, "eps = {}", self.operator.eps);
        let _ = writeln!(s, "perturbation = {}", self.operator.perturbation);
        let _ = writeln!(s, "params = {}", self.operator.params);
        let _ = writeln!(s, "\n[constants]");
        let _ = writeln!(s, "n = {}", c.n);
        let _ = writeln!(s, "lambda = {}", show_auto(c.lambda));
        let _ = writeln!(s, "Lambda = {}", show_auto(c.big_lambda));
        let _ = writeln!(s, "alpha_bar = {}", c.alpha_bar);
        let _ = writeln!(s, "alpha = {}", show_auto(c.alpha));
        let _ = writeln!(s, "K1 = {}", e.K1);
        let _ = writeln!(s, "alpha0 = {}", e.alpha0);
        let _ = writeln!(s, "Cprime = {}", e.Cprime);
        let _ = writeln!(s, "K2 = {}", e.K2);
        let _ = writeln!(s, "C3 = {}", e.C3);
        let _ = writeln!(s, "c0_variant = {}", variant_name(c.c0_variant));
        let _ = writeln!(s, "\n[solve]");
        let _ = writeln!(s, "boundary = {}", self.solve.boundary);
        let _ = writeln!(s, "rhs = {}", self.solve.rhs);
        let _ = writeln!(s, "rhs_file = {}", show_path(&self.solve.rhs_file));
        let _ = writeln!(s, "tol = {}", show_auto(self.solve.tol));
        let _ = writeln!(s, "max_sweeps = {}", self.solve.max_sweeps);
        let _ = writeln!(s, "relaxation = {}", show_auto(self.solve.relaxation));
        let _ = writeln!(s, "out = {}", show_path(&self.solve.out));
        let _ = writeln!(s, "summary = {}", show_path(&self.solve.summary));
        let _ = writeln!(s, "\n[analyze]");
        let _ = writeln!(s, "input = {}", show_path(&self.analyze.input));
        let _ = writeln!(s, "rho = {}", self.analyze.rho);
        let _ = writeln!(s, "kmax = {}", self.analyze.kmax);
        let _ = writeln!(s, "gamma = {}", show_auto(self.analyze.gamma));
        let _ = writeln!(s, "subsample = {}", self.analyze.subsample);
        let _ = writeln!(s, "strict = {}", self.analyze.strict);
        let _ = writeln!(s, "out_dir = {}", show_path(&self.analyze.out_dir));
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(s, "audit_samples = {}", self.run.audit_samples);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse_text("", "x").unwrap(), RunConfig::default());
    }

    #[test]
    fn canonical_round_trip() {
        let text = "# comment\n[grid]\nn = 65\n[operator]\nw0 = 1, 0.5, 2\neps = 0.1 # inline\nperturbation = sine\n\
                    [constants]\nLambda = 3\nc0_variant = statement\n[analyze]\nstrict = true\nout_dir = out\n";
        let cfg = RunConfig::parse_text(text, "x").unwrap();
        assert_eq!(cfg.grid.n, 65);
        assert_eq!(cfg.operator.w0, SymmetricMatrix2::new(1.0, 0.5, 2.0));
        assert_eq!(cfg.constants.big_lambda, Some(3.0));
        let canon = cfg.canonical();
        let back = RunConfig::parse_text(&canon, "canon").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.canonical(), canon);
    }

    #[test]
    fn errors_carry_locations() {
        let e = RunConfig::parse_text("[grid]\nn = 65\nbogus = 1\n", "cfg.txt").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.to_string(), "cfg.txt:3: unknown key 'bogus' in [grid]");
        let e = RunConfig::parse_text("n = 3\n", "c").unwrap_err();
        assert_eq!(e.line, 1);
        let e = RunConfig::parse_text("[grid]\n\n[nope]\n", "c").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (3, "unknown section [nope]"));
        let e = RunConfig::parse_text("[grid]\nn = 5\nn = 7\n", "c").unwrap_err();
        assert_eq!(e.line, 3);
        let e = RunConfig::parse_text("[operator]\nw0 = 1,2\n", "c").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn dotted_assignments() {
        let mut c = RunConfig::default();
        c.set_dotted("analyze.rho=0.25").unwrap();
        c.set_dotted("solve.tol = auto").unwrap();
        assert_eq!(c.analyze.rho, 0.25);
        assert!(c.set_dotted("rho=0.25").is_err());
        assert!(c.set_dotted("grid.n=x").is_err());
    }

    proptest::proptest! {
        #[test]
        fn canonical_form_is_a_fixed_point(
            n in 17usize..400,
            extent in 0.1f64..10.0,
            eps in 0.0f64..0.9,
            lambda in proptest::option::of(0.01f64..5.0),
            alpha_bar in 0.01f64..0.99,
            rho in 0.05f64..0.95,
            seed in proptest::prelude::any::<u64>(),
            strict in proptest::prelude::any::<bool>(),
        ) {
            let mut c = RunConfig::default();
            c.grid.n = n;
            c.grid.extent = extent;
            c.operator.eps = eps;
            c.constants.lambda = lambda;
            c.constants.alpha_bar = alpha_bar;
            c.analyze.rho = rho;
            c.analyze.strict = strict;
            c.run.seed = seed;
            let text = c.canonical();
            let back = RunConfig::parse_text(&text, "canon").unwrap();
            proptest::prop_assert_eq!(&back, &c);
            proptest::prop_assert_eq!(back.canonical(), text);
        }
    }
}
