//! Uniform 2-D lattices over a disk or square, and scalar fields on them.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 17 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("domain size must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("sub-domain radius {radius} exceeds lattice extent {extent}")]
    SubdomainTooLarge { radius: f64, extent: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value at node ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("grid functions live on different grids")]
    GridMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct GridFileError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disk,
    Square,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "disk" => Ok(Shape::Disk),
            "square" => Ok(Shape::Square),
            other => Err(format!("unknown shape '{other}' (expected 'disk' or 'square')")),
        }
    }
}

/// `n x n` lattice on `[-extent, extent]^2` with a disk or square domain of
/// size `radius <= extent` (radius for disks, half-width for squares).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    shape: Shape,
    n: usize,
    extent: f64,
    radius: f64,
    half_h: f64,
    inside: Vec<bool>,
    interior: Vec<bool>,
}

const MASK_TOL: f64 = 1e-12;

impl Grid2 {
    pub fn new(shape: Shape, n: usize, extent: f64) -> Result<Grid2, GridError> {
        Grid2::build(shape, n, extent, extent)
    }

    /// Unit disk with `n` nodes per axis.
    pub fn unit_disk(n: usize) -> Result<Grid2, GridError> {
        Grid2::new(Shape::Disk, n, 1.0)
    }

    /// Same lattice, smaller domain centred at the origin.
    pub fn restricted(&self, shape: Shape, radius: f64) -> Result<Grid2, GridError> {
        if radius > self.extent * (1.0 + MASK_TOL) {
            return Err(GridError::SubdomainTooLarge {
                radius,
                extent: self.extent,
            });
        }
        Grid2::build(shape, self.n, self.extent, radius)
    }

    fn build(shape: Shape, n: usize, extent: f64, radius: f64) -> Result<Grid2, GridError> {
        if n < 17 {
            return Err(GridError::TooFewNodes(n));
        }
        for v in [extent, radius] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GridError::BadExtent(v));
            }
        }
        let half_h = extent / (n - 1) as f64;
        let mut grid = Grid2 {
            shape,
            n,
            extent,
            radius,
            half_h,
            inside: vec![false; n * n],
            interior: vec![false; n * n],
        };
        for row in 0..n {
            for col in 0..n {
                let (x, y) = grid.coord_rc(row, col);
                grid.inside[row * n + col] = grid.contains(x, y);
            }
        }
        for row in 1..n - 1 {
            for col in 1..n - 1 {
                let all = (0..3).all(|dr| (0..3).all(|dc| grid.inside[(row + dr - 1) * n + col + dc - 1]));
                grid.interior[row * n + col] = all;
            }
        }
        Ok(grid)
    }

    /// Whether `(x, y)` lies in the closed domain.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self.shape {
            Shape::Disk => x * x + y * y <= self.radius * self.radius * (1.0 + MASK_TOL),
            Shape::Square => {
                let r = self.radius * (1.0 + MASK_TOL);
                x.abs() <= r && y.abs() <= r
            }
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    fn coord_rc(&self, row: usize, col: usize) -> (f64, f64) {
        let m = (self.n - 1) as f64;
        (
            (2.0 * col as f64 - m) * self.half_h,
            (2.0 * row as f64 - m) * self.half_h,
        )
    }

    /// Coordinates of node `idx`; symmetric about the origin exactly.
    pub fn coord(&self, idx: usize) -> (f64, f64) {
        let (row, col) = self.row_col(idx);
        self.coord_rc(row, col)
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.interior[idx]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.inside[idx] && !self.interior[idx]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.interior[i])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_boundary(i))
    }

    pub fn inside_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.inside[i])
    }

    /// Node nearest to `(x, y)` on the lattice (clamped to the lattice).
    pub fn nearest(&self, x: f64, y: f64) -> usize {
        let m = (self.n - 1) as f64;
        let col = ((x / self.half_h + m) / 2.0).round().clamp(0.0, m) as usize;
        let row = ((y / self.half_h + m) / 2.0).round().clamp(0.0, m) as usize;
        self.index(row, col)
    }

    /// Lattice nodes with `|node - center| <= r` (all lattice nodes, inside or not).
    pub fn nodes_in_ball(&self, center: (f64, f64), r: f64) -> Vec<usize> {
        let h = self.h();
        let m = (self.n - 1) as f64;
        let lo_c = (((center.0 - r) / self.half_h + m) / 2.0).floor().max(0.0) as usize;
        let hi_c = ((((center.0 + r) / self.half_h + m) / 2.0).ceil().min(m)) as usize;
        let lo_r = (((center.1 - r) / self.half_h + m) / 2.0).floor().max(0.0) as usize;
        let hi_r = ((((center.1 + r) / self.half_h + m) / 2.0).ceil().min(m)) as usize;
        let r2 = r * r * (1.0 + MASK_TOL) + (MASK_TOL * h).powi(2);
        let mut out = Vec::new();
        if lo_c > hi_c || lo_r > hi_r {
            return out;
        }
        for row in lo_r..=hi_r {
            for col in lo_c..=hi_c {
                let (x, y) = self.coord_rc(row, col);
                let (dx, dy) = (x - center.0, y - center.1);
                if dx * dx + dy * dy <= r2 {
                    out.push(self.index(row, col));
                }
            }
        }
        out
    }
}

/// Scalar field on a grid; `NaN` marks undefined nodes.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid2>,
    values: Vec<f64>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits() || a == b)
    }
}

impl GridFunction {
    pub fn new(grid: Arc<Grid2>, values: Vec<f64>) -> Result<GridFunction, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| v.is_infinite()) {
            let (row, col) = grid.row_col(i);
            return Err(GridError::NonFinite { row, col });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn undefined(grid: Arc<Grid2>) -> GridFunction {
        let len = grid.len();
        GridFunction {
            grid,
            values: vec![f64::NAN; len],
        }
    }

    /// Samples `f` at every node inside the domain.
    pub fn from_fn(grid: Arc<Grid2>, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = (0..grid.len())
            .map(|i| {
                if grid.is_inside(i) {
                    let (x, y) = grid.coord(i);
                    f(x, y)
                } else {
                    f64::NAN
                }
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn is_defined(&self, idx: usize) -> bool {
        !self.values[idx].is_nan()
    }

    pub fn defined_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&i| self.is_defined(i))
    }

    /// Max of `|u|` over defined nodes (0 if none).
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Max of `|u|` over defined nodes in the closed ball.
    pub fn sup_norm_in_ball(&self, center: (f64, f64), r: f64) -> f64 {
        self.grid
            .nodes_in_ball(center, r)
            .into_iter()
            .filter(|&i| self.is_defined(i))
            .fold(0.0, |m: f64, i| m.max(self.values[i].abs()))
    }

    /// Copy of `self` restricted to the nodes inside `grid` (same lattice).
    pub fn restrict_to(&self, grid: Arc<Grid2>) -> Result<GridFunction, GridError> {
        if grid.n() != self.grid.n() || grid.extent() != self.grid.extent() {
            return Err(GridError::GridMismatch);
        }
        let values = (0..grid.len())
            .map(|i| if grid.is_inside(i) { self.values[i] } else { f64::NAN })
            .collect();
        Ok(GridFunction { grid, values })
    }

    /// `a * self + b * other` on the common defined set.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction, GridError> {
        if *self.grid != *other.grid {
            return Err(GridError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Text form: header `grid <shape> <N> <extent>`, then one row per line.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::with_capacity(g.len() * 24);
        let _ = writeln!(out, "grid {} {} {:e}", g.shape().name(), g.n(), g.extent());
        for row in 0..g.n() {
            for col in 0..g.n() {
                if col > 0 {
                    out.push(' ');
                }
                let v = self.values[g.index(row, col)];
                if v.is_nan() {
                    out.push_str("nan");
                } else {
                    let _ = write!(out, "{v:e}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<GridFunction, GridFileError> {
        let err = |line: usize, message: String| GridFileError { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| err(1, "empty grid file".into()))?;
        let hl = hl + 1;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "grid" {
            return Err(err(hl, format!("expected 'grid <shape> <N> <extent>', found '{header}'")));
        }
        let shape: Shape = tokens[1].parse().map_err(|e: String| err(hl, e))?;
        let n: usize = tokens[2]
            .parse()
            .map_err(|_| err(hl, format!("invalid node count '{}'", tokens[2])))?;
        let extent: f64 = tokens[3]
            .parse()
            .map_err(|_| err(hl, format!("invalid extent '{}'", tokens[3])))?;
        let grid = Grid2::new(shape, n, extent).map_err(|e| err(hl, e.to_string()))?;
        let mut values = Vec::with_capacity(grid.len());
        let mut rows = 0;
        for (ln, line) in lines {
            let ln = ln + 1;
            if rows == n {
                return Err(err(ln, format!("more than {n} rows")));
            }
            let before = values.len();
            for tok in line.split_whitespace() {
                let v = if tok == "nan" {
                    f64::NAN
                } else {
                    let v: f64 = tok.parse().map_err(|_| err(ln, format!("invalid value '{tok}'")))?;
                    if !v.is_finite() {
                        return Err(err(ln, format!("non-finite value '{tok}'")));
                    }
                    v
                };
                values.push(v);
            }
            if values.len() - before != n {
                return Err(err(ln, format!("expected {n} values, found {}", values.len() - before)));
            }
            rows += 1;
        }
        if rows != n {
            return Err(err(hl, format!("expected {n} rows, found {rows}")));
        }
        GridFunction::new(Arc::new(grid), values).map_err(|e| err(hl, e.to_string()))
    }
}
