//! Point clouds and the shape normalization transform.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Half-extent every shape is scaled to. Leaves margin inside the fixed
/// [-1.03, 1.03] evaluation domain for off-surface samples.
pub const NORM_HALF_EXTENT: f64 = 0.9;

/// An unordered set of points, optionally carrying unit normals.
/// Normals are only ever consulted for evaluation, never for training.
#[derive(Clone, Debug)]
pub struct PointCloud<const D: usize> {
    pub points: Vec<Point<D>>,
    pub normals: Option<Vec<Point<D>>>,
}

impl<const D: usize> PointCloud<D> {
    /// Builds a cloud and checks the structural invariants: non-empty,
    /// finite coordinates, normals (if any) unit length and parallel.
    pub fn new(points: Vec<Point<D>>, normals: Option<Vec<Point<D>>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateInput("empty point cloud".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite point coordinates {:?}",
                p.0
            )));
        }
        if let Some(ns) = &normals {
            if ns.len() != points.len() {
                return Err(Error::DegenerateInput(format!(
                    "normal count {} does not match point count {}",
                    ns.len(),
                    points.len()
                )));
            }
            for n in ns {
                if !n.is_finite() || (n.norm() - 1.0).abs() > 1e-6 {
                    return Err(Error::DegenerateInput(format!(
                        "normal {:?} is not unit length",
                        n.0
                    )));
                }
            }
        }
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Componentwise bounding box as (min, max).
    pub fn bounds(&self) -> (Point<D>, Point<D>) {
        let mut lo = Point::splat(f64::INFINITY);
        let mut hi = Point::splat(f64::NEG_INFINITY);
        for p in &self.points {
            for d in 0..D {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

/// Similarity transform between original and normalized coordinates:
/// `normalized = (original - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormTransform<const D: usize> {
    pub center: Point<D>,
    /// Original units per normalized unit; always positive.
    pub scale: f64,
}

impl<const D: usize> NormTransform<D> {
    pub fn identity() -> Self {
        Self {
            center: Point::ZERO,
            scale: 1.0,
        }
    }

    #[inline]
    pub fn to_normalized(&self, p: Point<D>) -> Point<D> {
        (p - self.center) / self.scale
    }

    #[inline]
    pub fn to_original(&self, p: Point<D>) -> Point<D> {
        p * self.scale + self.center
    }
}

/// Centers the bounding box at the origin and scales uniformly so the
/// longest half-extent becomes [`NORM_HALF_EXTENT`]. Returns the normalized
/// cloud and the transform mapping normalized points back to the original.
pub fn normalize_cloud<const D: usize>(
    cloud: &PointCloud<D>,
) -> Result<(PointCloud<D>, NormTransform<D>)> {
    let (lo, hi) = cloud.bounds();
    let center = (lo + hi) * 0.5;
    let mut half = 0.0f64;
    for d in 0..D {
        half = half.max((hi[d] - lo[d]) * 0.5);
    }
    if half <= 0.0 {
        return Err(Error::DegenerateInput(
            "all points coincident, cannot normalize zero extent".into(),
        ));
    }
    let transform = NormTransform {
        center,
        scale: half / NORM_HALF_EXTENT,
    };
    let points = cloud
        .points
        .iter()
        .map(|&p| transform.to_normalized(p))
        .collect();
    let normalized = PointCloud {
        points,
        // Uniform scaling leaves directions untouched.
        normals: cloud.normals.clone(),
    };
    Ok((normalized, transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_point_cloud_normalizes_to_band_edges() {
        let cloud =
            PointCloud::new(vec![Point([0.0, 0.0, 0.0]), Point([10.0, 0.0, 0.0])], None).unwrap();
        let (norm, t) = normalize_cloud(&cloud).unwrap();
        assert_relative_eq!(t.center[0], 5.0);
        assert_relative_eq!(t.scale, 10.0 / 1.8, epsilon = 1e-12);
        assert_relative_eq!(norm.points[0][0], -0.9, epsilon = 1e-12);
        assert_relative_eq!(norm.points[1][0], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn already_normalized_cloud_gets_identity_transform() {
        let cloud = PointCloud::new(
            vec![
                Point([-0.9, -0.9, -0.9]),
                Point([0.9, 0.9, 0.9]),
                Point([0.1, -0.3, 0.2]),
            ],
            None,
        )
        .unwrap();
        let (_, t) = normalize_cloud(&cloud).unwrap();
        assert_relative_eq!(t.scale, 1.0, epsilon = 1e-12);
        assert_eq!(t.center, Point::ZERO);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let cloud =
            PointCloud::new(vec![Point([1.0, 2.0]), Point([1.0, 2.0]), Point([1.0, 2.0])], None)
                .unwrap();
        assert!(matches!(
            normalize_cloud(&cloud),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn non_unit_normals_are_rejected() {
        let r = PointCloud::new(
            vec![Point([0.0, 0.0])],
            Some(vec![Point([0.5, 0.0])]),
        );
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn normalization_round_trips(
            pts in prop::collection::vec(
                prop::array::uniform3(-1e3..1e3f64), 2..40),
            spread in 1e-6..1e4f64,
        ) {
            let points: Vec<Point<3>> =
                pts.iter().map(|a| Point(*a) * spread).collect();
            let cloud = PointCloud::new(points.clone(), None).unwrap();
            prop_assume!(normalize_cloud(&cloud).is_ok());
            let (norm, t) = normalize_cloud(&cloud).unwrap();
            let mut max_abs: f64 = 0.0;
            for (orig, n) in points.iter().zip(&norm.points) {
                let back = t.to_original(*n);
                let scale = orig.norm().max(1.0);
                prop_assert!(back.dist(*orig) <= 1e-10 * scale);
                for d in 0..3 {
                    max_abs = max_abs.max(n[d].abs());
                }
            }
            // Longest half-extent lands exactly on the band edge.
            prop_assert!(max_abs <= 0.9 + 1e-12);
            prop_assert!((max_abs - 0.9).abs() <= 1e-9);
        }
    }
}
