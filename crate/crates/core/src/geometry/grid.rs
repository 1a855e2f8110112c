//! Axis-aligned evaluation lattices.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A regular lattice spanning `[lower, upper]` with `res[d]` samples per
/// axis, endpoints included on both sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisGrid<const D: usize> {
    pub lower: Point<D>,
    pub upper: Point<D>,
    pub res: [usize; D],
}

impl<const D: usize> AxisGrid<D> {
    pub fn new(lower: Point<D>, upper: Point<D>, res: [usize; D]) -> Result<Self> {
        for d in 0..D {
            if !(lower[d] < upper[d]) {
                return Err(Error::InvalidConfig(format!(
                    "grid bounds must satisfy lower < upper, got {} >= {} on axis {}",
                    lower[d], upper[d], d
                )));
            }
            if res[d] < 2 {
                return Err(Error::InvalidConfig(format!(
                    "grid resolution must be at least 2 per axis, got {} on axis {}",
                    res[d], d
                )));
            }
        }
        Ok(Self { lower, upper, res })
    }

    /// Cubic grid over `[-half, half]^D` at uniform resolution.
    pub fn cube(half: f64, res: usize) -> Result<Self> {
        Self::new(Point::splat(-half), Point::splat(half), [res; D])
    }

    pub fn num_points(&self) -> usize {
        self.res.iter().product()
    }

    /// Sample spacing along axis `d`.
    #[inline]
    pub fn step(&self, d: usize) -> f64 {
        (self.upper[d] - self.lower[d]) / (self.res[d] - 1) as f64
    }

    /// Coordinate of lattice index `idx`.
    #[inline]
    pub fn point_at(&self, idx: [usize; D]) -> Point<D> {
        let mut p = Point::ZERO;
        for d in 0..D {
            p[d] = if idx[d] + 1 == self.res[d] {
                // Land exactly on the upper bound rather than within rounding of it.
                self.upper[d]
            } else {
                self.lower[d] + idx[d] as f64 * self.step(d)
            };
        }
        p
    }

    /// Row-major linear index, last axis fastest.
    #[inline]
    pub fn linear_index(&self, idx: [usize; D]) -> usize {
        let mut lin = 0;
        for d in 0..D {
            lin = lin * self.res[d] + idx[d];
        }
        lin
    }

    /// Inverse of [`Self::linear_index`].
    #[inline]
    pub fn multi_index(&self, mut lin: usize) -> [usize; D] {
        let mut idx = [0; D];
        for d in (0..D).rev() {
            idx[d] = lin % self.res[d];
            lin /= self.res[d];
        }
        idx
    }

    /// All lattice points in linear-index order.
    pub fn points(&self) -> Vec<Point<D>> {
        (0..self.num_points())
            .map(|lin| self.point_at(self.multi_index(lin)))
            .collect()
    }
}
