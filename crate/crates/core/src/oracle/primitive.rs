//! Analytic scaled-squared-distance fields for primitive shapes, with exact
//! jets wherever the field is twice differentiable.

use crate::error::{Error, Result};
use crate::field::Jet2;
use crate::geometry::Point;

/// Geometric support of an analytic field. In 2D a `Sphere` is a circle and a
/// `Plane` is a line; `Arc` exists only in 2D.
#[derive(Clone, Copy, Debug)]
pub enum PrimitiveShape<const D: usize> {
    Sphere { center: Point<D>, radius: f64 },
    Plane { point: Point<D>, normal: Point<D> },
    Segment { a: Point<D>, b: Point<D> },
    /// Circular arc, angles in radians, counter-clockwise from `theta0` to
    /// `theta1`. Constructible only for D = 2.
    Arc { center: Point<D>, radius: f64, theta0: f64, theta1: f64 },
}

/// A primitive together with the distance scaling `k`, defining the field
/// `t(x) = k * g(x)^2` for `g` the distance to the shape.
#[derive(Clone, Copy, Debug)]
pub struct Primitive<const D: usize> {
    pub shape: PrimitiveShape<D>,
    pub k: f64,
}

impl<const D: usize> Primitive<D> {
    pub fn sphere(center: Point<D>, radius: f64, k: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {}", radius)));
        }
        Self::check_k(k)?;
        Ok(Self { shape: PrimitiveShape::Sphere { center, radius }, k })
    }

    /// `normal` is normalized here; zero vectors are rejected.
    pub fn plane(point: Point<D>, normal: Point<D>, k: f64) -> Result<Self> {
        let normal = normal
            .normalized(1e-12)
            .ok_or_else(|| Error::InvalidConfig("plane normal must be nonzero".into()))?;
        Self::check_k(k)?;
        Ok(Self { shape: PrimitiveShape::Plane { point, normal }, k })
    }

    pub fn segment(a: Point<D>, b: Point<D>, k: f64) -> Result<Self> {
        if a.dist(b) <= 1e-12 {
            return Err(Error::InvalidConfig("segment endpoints must differ".into()));
        }
        Self::check_k(k)?;
        Ok(Self { shape: PrimitiveShape::Segment { a, b }, k })
    }

    fn check_k(k: f64) -> Result<()> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidConfig(format!("k must be positive and finite, got {}", k)));
        }
        Ok(())
    }
}

impl Primitive<2> {
    /// Open circular arc from `theta0` to `theta1` (radians, strictly
    /// increasing, spanning less than a full turn).
    pub fn arc(center: Point<2>, radius: f64, theta0: f64, theta1: f64, k: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {}", radius)));
        }
        let span = theta1 - theta0;
        if !(span > 1e-9) || span >= std::f64::consts::TAU {
            return Err(Error::InvalidConfig(format!(
                "arc angle span must lie in (0, 2pi), got {}",
                span
            )));
        }
        Self::check_k(k)?;
        Ok(Self { shape: PrimitiveShape::Arc { center, radius, theta0, theta1 }, k })
    }
}

/// Wraps an angle difference into (-pi, pi].
fn wrap_angle(mut a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    a %= TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

fn arc_endpoints(center: Point<2>, radius: f64, theta0: f64, theta1: f64) -> (Point<2>, Point<2>) {
    let e0 = center + Point([theta0.cos(), theta0.sin()]) * radius;
    let e1 = center + Point([theta1.cos(), theta1.sin()]) * radius;
    (e0, e1)
}

impl<const D: usize> Primitive<D> {
    /// Euclidean distance from `x` to the shape. Total: defined everywhere.
    pub fn distance(&self, x: Point<D>) -> f64 {
        match self.shape {
            PrimitiveShape::Sphere { center, radius } => (x.dist(center) - radius).abs(),
            PrimitiveShape::Plane { point, normal } => (x - point).dot(normal).abs(),
            PrimitiveShape::Segment { a, b } => {
                let v = b - a;
                let s = ((x - a).dot(v) / v.norm_sq()).clamp(0.0, 1.0);
                x.dist(a + v * s)
            }
            PrimitiveShape::Arc { center, radius, theta0, theta1 } => {
                let u = x - center;
                let phi = u[1].atan2(u[0]);
                let mid = 0.5 * (theta0 + theta1);
                let halfspan = 0.5 * (theta1 - theta0);
                if wrap_angle(phi - mid).abs() <= halfspan {
                    (u.norm() - radius).abs()
                } else {
                    let (e0, e1) = arc_endpoints(
                        Point([center[0], center[1]]),
                        radius,
                        theta0,
                        theta1,
                    );
                    let x2 = Point([x[0], x[1]]);
                    x2.dist(e0).min(x2.dist(e1))
                }
            }
        }
    }

    /// `t(x) = k * g(x)^2`.
    pub fn value(&self, x: Point<D>) -> f64 {
        let g = self.distance(x);
        self.k * g * g
    }

    /// True when the field is twice differentiable at `x` with clearance
    /// `margin` from every cut locus and Hessian seam.
    pub fn differentiable_at(&self, x: Point<D>, margin: f64) -> bool {
        match self.shape {
            PrimitiveShape::Sphere { center, .. } => x.dist(center) > margin,
            PrimitiveShape::Plane { .. } => true,
            PrimitiveShape::Segment { a, b } => {
                // Seams: the two planes through the endpoints orthogonal to
                // the axis, where the closest-feature region changes.
                let v = b - a;
                let l = v.norm();
                let s = (x - a).dot(v) / l;
                s.abs() > margin && (s - l).abs() > margin
            }
            PrimitiveShape::Arc { center, radius, theta0, theta1 } => {
                let u = x - center;
                let rho = u.norm();
                if rho <= margin {
                    return false;
                }
                let mid = 0.5 * (theta0 + theta1);
                let halfspan = 0.5 * (theta1 - theta0);
                let delta = wrap_angle(u[1].atan2(u[0]) - mid);
                // Arc-sector seams at the endpoint rays, measured as arc
                // length so the margin stays metric.
                if (delta.abs() - halfspan).abs() * rho.max(radius) <= margin {
                    return false;
                }
                if delta.abs() < halfspan {
                    true
                } else {
                    // Beyond the endpoints the nearest endpoint must win
                    // clearly, or we are near the two-endpoint cut locus.
                    let (e0, e1) =
                        arc_endpoints(Point([center[0], center[1]]), radius, theta0, theta1);
                    let x2 = Point([x[0], x[1]]);
                    (x2.dist(e0) - x2.dist(e1)).abs() > margin
                }
            }
        }
    }

    /// Exact jet of the field at `x`. Errors on cut-locus or seam queries.
    pub fn jet(&self, x: Point<D>) -> Result<Jet2<D>> {
        if !self.differentiable_at(x, 1e-9) {
            return Err(Error::NonDifferentiable(format!(
                "{:?} at {:?}",
                self.shape, x.0
            )));
        }
        let k2 = 2.0 * self.k;
        Ok(match self.shape {
            PrimitiveShape::Sphere { center, radius } => {
                let u = x - center;
                let rho = u.norm();
                let d = rho - radius;
                let uh = u / rho;
                let mut hess = [[0.0; D]; D];
                let radial = uh.outer(uh);
                for i in 0..D {
                    for j in 0..D {
                        let tangential = (if i == j { 1.0 } else { 0.0 }) - radial[i][j];
                        hess[i][j] = k2 * (radial[i][j] + d / rho * tangential);
                    }
                }
                Jet2 { val: self.k * d * d, grad: uh * (k2 * d), hess }
            }
            PrimitiveShape::Plane { point, normal } => {
                let s = (x - point).dot(normal);
                let outer = normal.outer(normal);
                let mut hess = [[0.0; D]; D];
                for i in 0..D {
                    for j in 0..D {
                        hess[i][j] = k2 * outer[i][j];
                    }
                }
                Jet2 { val: self.k * s * s, grad: normal * (k2 * s), hess }
            }
            PrimitiveShape::Segment { a, b } => {
                let v = b - a;
                let l = v.norm();
                let vh = v / l;
                let s = (x - a).dot(vh);
                if s < 0.0 {
                    point_field_jet(self.k, x, a)
                } else if s > l {
                    point_field_jet(self.k, x, b)
                } else {
                    // Between the endpoint planes: squared distance to the
                    // supporting line, flat along the axis.
                    let w = (x - a) - vh * s;
                    let axis = vh.outer(vh);
                    let mut hess = [[0.0; D]; D];
                    for i in 0..D {
                        for j in 0..D {
                            hess[i][j] =
                                k2 * ((if i == j { 1.0 } else { 0.0 }) - axis[i][j]);
                        }
                    }
                    Jet2 { val: self.k * w.norm_sq(), grad: w * k2, hess }
                }
            }
            PrimitiveShape::Arc { center, radius, theta0, theta1 } => {
                let u = x - center;
                let rho = u.norm();
                let mid = 0.5 * (theta0 + theta1);
                let halfspan = 0.5 * (theta1 - theta0);
                let delta = wrap_angle(u[1].atan2(u[0]) - mid);
                if delta.abs() < halfspan {
                    let d = rho - radius;
                    let uh = u / rho;
                    let radial = uh.outer(uh);
                    let mut hess = [[0.0; D]; D];
                    for i in 0..D {
                        for j in 0..D {
                            let tangential = (if i == j { 1.0 } else { 0.0 }) - radial[i][j];
                            hess[i][j] = k2 * (radial[i][j] + d / rho * tangential);
                        }
                    }
                    Jet2 { val: self.k * d * d, grad: uh * (k2 * d), hess }
                } else {
                    let (e0, e1) =
                        arc_endpoints(Point([center[0], center[1]]), radius, theta0, theta1);
                    let x2 = Point([x[0], x[1]]);
                    let e = if x2.dist(e0) < x2.dist(e1) { e0 } else { e1 };
                    let mut ed = Point::ZERO;
                    for d in 0..D {
                        ed[d] = e[d];
                    }
                    point_field_jet(self.k, x, ed)
                }
            }
        })
    }
}

/// Jet of `k * |x - p|^2`: the field seen past an endpoint.
fn point_field_jet<const D: usize>(k: f64, x: Point<D>, p: Point<D>) -> Jet2<D> {
    let w = x - p;
    let mut hess = [[0.0; D]; D];
    for i in 0..D {
        hess[i][i] = 2.0 * k;
    }
    Jet2 { val: k * w.norm_sq(), grad: w * (2.0 * k), hess }
}
