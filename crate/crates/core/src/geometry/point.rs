//! Fixed-dimension points and vectors.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub};

/// A point or direction in `D`-dimensional space. Used for both; the
/// distinction never pays for itself at this scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<const D: usize>(pub [f64; D]);

impl<const D: usize> Point<D> {
    pub const ZERO: Self = Point([0.0; D]);

    #[inline]
    pub fn splat(v: f64) -> Self {
        Point([v; D])
    }

    #[inline]
    pub fn dot(self, rhs: Self) -> f64 {
        let mut acc = 0.0;
        for d in 0..D {
            acc += self.0[d] * rhs.0[d];
        }
        acc
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, rhs: Self) -> f64 {
        (self - rhs).norm()
    }

    #[inline]
    pub fn dist_sq(self, rhs: Self) -> f64 {
        (self - rhs).norm_sq()
    }

    /// Unit vector in the same direction; `None` when shorter than `eps`.
    #[inline]
    pub fn normalized(self, eps: f64) -> Option<Self> {
        let n = self.norm();
        if n > eps {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Outer product `self * rhs^T` as a row-major matrix.
    #[inline]
    pub fn outer(self, rhs: Self) -> [[f64; D]; D] {
        let mut m = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                m[i][j] = self.0[i] * rhs.0[j];
            }
        }
        m
    }
}

impl Point<3> {
    #[inline]
    pub fn cross(self, rhs: Self) -> Self {
        Point([
            self.0[1] * rhs.0[2] - self.0[2] * rhs.0[1],
            self.0[2] * rhs.0[0] - self.0[0] * rhs.0[2],
            self.0[0] * rhs.0[1] - self.0[1] * rhs.0[0],
        ])
    }
}

impl<const D: usize> Default for Point<D> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<const D: usize> Index<usize> for Point<D> {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const D: usize> IndexMut<usize> for Point<D> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        for d in 0..D {
            self.0[d] += rhs.0[d];
        }
        self
    }
}

impl<const D: usize> AddAssign for Point<D> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for d in 0..D {
            self.0[d] += rhs.0[d];
        }
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        for d in 0..D {
            self.0[d] -= rhs.0[d];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Point<D> {
    type Output = Self;
    #[inline]
    fn mul(mut self, s: f64) -> Self {
        for d in 0..D {
            self.0[d] *= s;
        }
        self
    }
}

impl<const D: usize> Div<f64> for Point<D> {
    type Output = Self;
    #[inline]
    fn div(self, s: f64) -> Self {
        self * (1.0 / s)
    }
}

impl<const D: usize> Neg for Point<D> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}
