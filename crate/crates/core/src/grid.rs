//! Uniform grids and piecewise-linear grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `lo = x_0 < ... < x_{n-1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_points < 16 {
            return Err(Error::validation(format!("grid needs at least 16 points, got {n_points}")));
        }
        Ok(Self { lo, hi, n_points })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Index `k` of the segment `[x_k, x_{k+1}]` holding `x`, clamped to the end segments.
    pub fn segment(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.spacing()).floor();
        if t < 0.0 {
            0
        } else {
            (t as usize).min(self.n_points - 2)
        }
    }

    /// Samples a function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(*self, self.nodes().into_iter().map(f).collect())
    }
}

/// Node values on a grid, read as the piecewise-linear interpolant with
/// linear extrapolation from the end segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction", into = "RawGridFunction")]
pub struct GridFunction {
    grid: GridSpec,
    values: Vec<f64>,
    sup_norm: f64,
    lip_norm: f64,
    curvature: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGridFunction {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGridFunction) -> Result<Self> {
        let grid = GridSpec::new(raw.lo, raw.hi, raw.values.len())?;
        GridFunction::new(grid, raw.values)
    }
}

impl From<GridFunction> for RawGridFunction {
    fn from(g: GridFunction) -> Self {
        RawGridFunction { lo: g.grid.lo, hi: g.grid.hi, values: g.values }
    }
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::validation(format!(
                "grid has {} points but {} values given",
                grid.n_points,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite grid value {v}")));
        }
        let h = grid.spacing();
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lip_norm = values.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs() / h));
        let curvature = values
            .windows(3)
            .fold(0.0f64, |m, w| m.max((w[2] - 2.0 * w[1] + w[0]).abs() / (h * h)));
        Ok(Self { grid, values, sup_norm, lip_norm, curvature })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Maximum of `|h|` over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Lipschitz constant of the interpolant (largest segment slope).
    pub fn lip_norm(&self) -> f64 {
        self.lip_norm
    }

    /// Largest second difference quotient; a finite-difference estimate of `|h''|`.
    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    /// Bounded-Lipschitz norm `sup + Lip`.
    pub fn b_norm(&self) -> f64 {
        self.sup_norm + self.lip_norm
    }

    /// Slope of segment `k`.
    pub fn slope(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / self.grid.spacing()
    }

    /// Value of the interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.grid.segment(x);
        self.values[k] + self.slope(k) * (x - self.grid.x(k))
    }

    /// One-sided derivative of the interpolant at `x`, taking the segment to the right on ties.
    pub fn derivative(&self, x: f64) -> f64 {
        self.slope(self.grid.segment(x))
    }

    /// `a * self + b * other` on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::validation("grid functions live on different grids"));
        }
        let v = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        GridFunction::new(self.grid, v)
    }

    /// Resamples onto another grid through the interpolant.
    pub fn resample(&self, grid: GridSpec) -> Result<GridFunction> {
        grid.sample(|x| self.eval(x))
    }
}
