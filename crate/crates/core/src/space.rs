//! Integer-stepped search grid.
//!
//! Every point the engine touches is stored as a [`Cell`], a vector of grid
//! indices, so grid alignment and tabu membership are exact integer checks.
//! [`DesignVector`] is the real-valued view of a cell.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when deciding whether a real value sits on the grid.
pub const GRID_TOL: f64 = 1e-9;

/// Grid indices of a point, one per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(pub Vec<i64>);

impl Cell {
    pub fn indices(&self) -> &[i64] {
        &self.0
    }
}

/// Real-valued design variables, one per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVector(pub Vec<f64>);

impl DesignVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for DesignVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DesignVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Box-bounded grid: `lower + i * min_step` for `i = 0..=intervals`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    min_step: Vec<f64>,
    intervals: Vec<i64>,
}

impl SearchSpace {
    /// Builds a grid, checking that every range is a whole number of minimum steps.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, min_step: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        if d == 0 {
            return Err(Error::InvalidSpace("zero dimensions".into()));
        }
        if upper.len() != d || min_step.len() != d {
            return Err(Error::InvalidSpace(format!(
                "bound lengths differ: lower {d}, upper {}, min_step {}",
                upper.len(),
                min_step.len()
            )));
        }
        let mut intervals = Vec::with_capacity(d);
        for i in 0..d {
            let (lo, hi, step) = (lower[i], upper[i], min_step[i]);
            if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
                return Err(Error::InvalidSpace(format!("non-finite bound in dimension {i}")));
            }
            if lo >= hi {
                return Err(Error::InvalidSpace(format!("lower {lo} >= upper {hi} in dimension {i}")));
            }
            if step <= 0.0 {
                return Err(Error::InvalidSpace(format!("min_step {step} <= 0 in dimension {i}")));
            }
            let n = (hi - lo) / step;
            let rounded = n.round();
            if (n - rounded).abs() > GRID_TOL * rounded.max(1.0) {
                return Err(Error::InvalidSpace(format!(
                    "range [{lo}, {hi}] is not a multiple of step {step} in dimension {i}"
                )));
            }
            intervals.push(rounded as i64);
        }
        Ok(Self { lower, upper, min_step, intervals })
    }

    /// Convenience constructor from `(lower, upper, min_step)` triples.
    pub fn from_bounds(bounds: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
            bounds.iter().map(|b| b.2).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn min_step(&self) -> &[f64] {
        &self.min_step
    }

    /// Number of minimum steps spanning each dimension.
    pub fn intervals(&self) -> &[i64] {
        &self.intervals
    }

    /// Total number of grid cells.
    pub fn cell_count(&self) -> u128 {
        self.intervals.iter().map(|&n| n as u128 + 1).product()
    }

    /// Real value of grid index `idx` in dimension `i`. The upper bound is
    /// returned exactly for the last index.
    pub fn value_at(&self, i: usize, idx: i64) -> f64 {
        if idx == self.intervals[i] {
            self.upper[i]
        } else {
            self.lower[i] + idx as f64 * self.min_step[i]
        }
    }

    pub fn point(&self, cell: &Cell) -> DesignVector {
        DesignVector(cell.0.iter().enumerate().map(|(i, &k)| self.value_at(i, k)).collect())
    }

    /// Clamps raw indices into range.
    pub fn clamp(&self, mut raw: Vec<i64>) -> Cell {
        for (k, &n) in raw.iter_mut().zip(&self.intervals) {
            *k = (*k).clamp(0, n);
        }
        Cell(raw)
    }

    /// Nearest cell to `v`, clamped to the bounds.
    pub fn snap(&self, v: &[f64]) -> Result<Cell> {
        self.check_dim(v.len())?;
        let raw = v.iter().enumerate().map(|(i, &x)| ((x - self.lower[i]) / self.min_step[i]).round() as i64).collect();
        Ok(self.clamp(raw))
    }

    /// Cell of an aligned, in-bounds vector. Fails if `v` is off the grid.
    pub fn cell_of(&self, v: &[f64]) -> Result<Cell> {
        if !self.is_aligned(v) {
            return Err(Error::OutOfBounds(v.to_vec()));
        }
        self.snap(v)
    }

    /// True when `v` has the right length, lies within bounds and sits on the grid.
    pub fn is_aligned(&self, v: &[f64]) -> bool {
        v.len() == self.dim()
            && v.iter().enumerate().all(|(i, &x)| {
                let k = (x - self.lower[i]) / self.min_step[i];
                let r = k.round();
                (k - r).abs() <= GRID_TOL * r.abs().max(1.0) && r >= 0.0 && r as i64 <= self.intervals[i]
            })
    }

    pub fn random_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> Cell {
        Cell(self.intervals.iter().map(|&n| rng.gen_range(0..=n)).collect())
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim(), got })
        }
    }
}
