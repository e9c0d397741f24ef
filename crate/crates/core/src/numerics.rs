//! Uniform grids, finite-difference operators and quadrature.
//!
//! Every solver and functional in the crate goes through this module, so the
//! accuracy of the whole stack is pinned here: second-order central stencils
//! in the interior, second-order one-sided closures for first and second
//! derivatives at bounded edges (first-order for the third derivative), and
//! trapezoid quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible grid.
pub const MIN_POINTS: usize = 8;

/// A uniform one-dimensional grid.
///
/// Bounded grids include both endpoints, so `dx = (x_hi - x_lo) / (n - 1)`.
/// Periodic grids omit the right endpoint, so `dx = (x_hi - x_lo) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_lo: f64,
    x_hi: f64,
    n: usize,
    dx: f64,
    periodic: bool,
}

impl Grid1D {
    pub fn bounded(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        Self::check(x_lo, x_hi, n)?;
        Ok(Self {
            x_lo,
            x_hi,
            n,
            dx: (x_hi - x_lo) / (n - 1) as f64,
            periodic: false,
        })
    }

    pub fn periodic(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        Self::check(x_lo, x_hi, n)?;
        Ok(Self {
            x_lo,
            x_hi,
            n,
            dx: (x_hi - x_lo) / n as f64,
            periodic: true,
        })
    }

    fn check(x_lo: f64, x_hi: f64, n: usize) -> Result<()> {
        if !x_lo.is_finite() || !x_hi.is_finite() || x_hi <= x_lo {
            return Err(Error::InvalidParameter(format!(
                "grid interval [{x_lo}, {x_hi}] is empty or non-finite"
            )));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_POINTS} points, got {n}"
            )));
        }
        Ok(())
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// The same interval with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if self.periodic {
            Self::periodic(self.x_lo, self.x_hi, self.n * factor)
        } else {
            Self::bounded(self.x_lo, self.x_hi, (self.n - 1) * factor + 1)
        }
    }

    /// Trapezoid (bounded) or rectangle (periodic) weights, including `dx`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n];
        if !self.periodic {
            w[0] *= 0.5;
            w[self.n - 1] *= 0.5;
        }
        w
    }
}

/// Boundary treatment of a one-dimensional run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    /// Zero density slope at both ends, velocity pinned to `u0` and `u1`.
    NeumannDensityDirichletVelocity { u0: f64, u1: f64 },
    /// Zero density slope at both ends; the momentum-flux constants `c1`,
    /// `c2` are recorded for monitoring and never imposed.
    Monitored { c1: f64, c2: f64 },
}

impl BoundaryKind {
    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryKind::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundaryKind::Periodic => Ok(()),
            BoundaryKind::NeumannDensityDirichletVelocity { u0, u1 } => {
                if u0.is_finite() && u1.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("boundary velocities must be finite".into()))
                }
            }
            BoundaryKind::Monitored { c1, c2 } => {
                if c1.is_finite() && c2.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("monitored constants must be finite".into()))
                }
            }
        }
    }

    /// True when the monitored constants lie in the blow-up regime
    /// `c1 <= 0`, `c2 <= 0`. Only a flag; nothing enforces it.
    pub fn in_nonpositive_flux_regime(&self) -> Option<bool> {
        match *self {
            BoundaryKind::Monitored { c1, c2 } => Some(c1 <= 0.0 && c2 <= 0.0),
            _ => None,
        }
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.is_periodic() != grid.is_periodic() {
            return Err(Error::GridMismatch(
                "periodic boundary requires a periodic grid and vice versa",
            ));
        }
        Ok(())
    }
}

/// Real samples on a one-dimensional grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("sample count differs from grid size"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field samples" });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the smallest sample.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids"));
        }
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.zip_with(other, |a, b| alpha * a + beta * b)
    }
}

/// Finite-difference derivative of order 1, 2 or 3.
pub fn derivative(f: &ScalarField, order: usize, bc: &BoundaryKind) -> Result<ScalarField> {
    bc.check_grid(f.grid())?;
    let values = derivative_values(f.values(), f.grid().dx(), f.grid().is_periodic(), order)?;
    ScalarField::new(*f.grid(), values).map_err(|_| Error::NonFinite {
        what: "derivative",
    })
}

/// Slice-level derivative shared by the 1D and tensor-grid operators.
pub(crate) fn derivative_values(
    f: &[f64],
    dx: f64,
    periodic: bool,
    order: usize,
) -> Result<Vec<f64>> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    let n = f.len();
    if n < order + 2 {
        return Err(Error::StencilUnderflow {
            order,
            needed: order + 2,
            have: n,
        });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "derivative input",
        });
    }
    let mut out = vec![0.0; n];
    if periodic {
        let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as isize;
            *o = match order {
                1 => (at(i + 1) - at(i - 1)) / (2.0 * dx),
                2 => (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (dx * dx),
                _ => (at(i + 2) - 2.0 * at(i + 1) + 2.0 * at(i - 1) - at(i - 2)) / (2.0 * dx.powi(3)),
            };
        }
        return Ok(out);
    }
    match order {
        1 => {
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
            }
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
            out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
        }
        2 => {
            let h2 = dx * dx;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
            }
            out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        }
        _ => {
            let h3 = dx.powi(3);
            for i in 2..n - 2 {
                out[i] = (f[i + 2] - 2.0 * f[i + 1] + 2.0 * f[i - 1] - f[i - 2]) / (2.0 * h3);
            }
            for i in [0, 1] {
                out[i] = (-f[i] + 3.0 * f[i + 1] - 3.0 * f[i + 2] + f[i + 3]) / h3;
            }
            for i in [n - 2, n - 1] {
                out[i] = (f[i] - 3.0 * f[i - 1] + 3.0 * f[i - 2] - f[i - 3]) / h3;
            }
        }
    }
    Ok(out)
}

/// Trapezoid rule on bounded grids, rectangle rule on periodic ones.
pub fn integrate(f: &ScalarField) -> f64 {
    integrate_values(f.grid(), f.values())
}

pub(crate) fn integrate_values(grid: &Grid1D, values: &[f64]) -> f64 {
    grid.quadrature_weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Running trapezoid integral of uniformly spaced samples, starting at zero.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Running trapezoid integral over possibly non-uniform abscissae.
pub fn cumulative_trapezoid_nonuniform(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    if !y.is_empty() {
        out.push(acc);
    }
    for i in 1..y.len().min(t.len()) {
        acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Tensor product of two one-dimensional grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Self {
        Self { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, `x` varying slowest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.y.len() + j
    }
}

/// Real samples on a tensor grid, stored row-major with `x` slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("sample count differs from grid size"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "2D field samples" });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.x.len() {
            for j in 0..grid.y.len() {
                values.push(f(grid.x.x(i), grid.y.x(j)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids"));
        }
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Partial derivative along `x` (axis 0) or `y` (axis 1).
    pub fn partial(&self, axis: usize, order: usize) -> Result<Self> {
        let (nx, ny) = (self.grid.x.len(), self.grid.y.len());
        let mut out = vec![0.0; self.values.len()];
        match axis {
            0 => {
                let mut line = vec![0.0; nx];
                for j in 0..ny {
                    for (i, l) in line.iter_mut().enumerate() {
                        *l = self.values[self.grid.index(i, j)];
                    }
                    let d = derivative_values(&line, self.grid.x.dx(), self.grid.x.is_periodic(), order)?;
                    for (i, v) in d.into_iter().enumerate() {
                        out[self.grid.index(i, j)] = v;
                    }
                }
            }
            1 => {
                for i in 0..nx {
                    let row = &self.values[i * ny..(i + 1) * ny];
                    let d = derivative_values(row, self.grid.y.dx(), self.grid.y.is_periodic(), order)?;
                    out[i * ny..(i + 1) * ny].copy_from_slice(&d);
                }
            }
            _ => return Err(Error::InvalidParameter(format!("axis {axis} out of range"))),
        }
        Self::new(self.grid, out)
    }
}

/// Tensorized trapezoid / rectangle quadrature.
pub fn integrate_2d(f: &Field2D) -> f64 {
    let wx = f.grid.x.quadrature_weights();
    let wy = f.grid.y.quadrature_weights();
    let mut sum = 0.0;
    for (i, wxi) in wx.iter().enumerate() {
        for (j, wyj) in wy.iter().enumerate() {
            sum += wxi * wyj * f.at(i, j);
        }
    }
    sum
}
