//! Exact nearest-neighbor queries over a balanced kd-tree.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Balanced kd-tree over a point set with payload indices.
///
/// Built single-threaded; immutable afterwards, so concurrent queries are
/// safe. Queries return the exact Euclidean nearest neighbor, with distance
/// ties resolved to the smallest payload index.
#[derive(Clone, Debug)]
pub struct NnIndex<const D: usize> {
    points: Vec<Point<D>>,
    /// Payload indices arranged so that `order[lo..hi]` is a subtree with
    /// its node at the midpoint.
    order: Vec<u32>,
    /// Split axis of the node at the same position in `order`.
    axes: Vec<u8>,
}

impl<const D: usize> NnIndex<D> {
    /// Indexes `points`; payloads are their positions in the slice.
    pub fn build(points: &[Point<D>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateInput(
                "cannot index an empty point set".into(),
            ));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite point coordinates {:?}",
                p.0
            )));
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            axes: vec![0; points.len()],
        };
        index.build_range(0, points.len());
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_range(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let axis = self.widest_axis(lo, hi);
        let mid = lo + (hi - lo) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a as usize][axis]
                .total_cmp(&points[b as usize][axis])
                .then(a.cmp(&b))
        });
        self.axes[mid] = axis as u8;
        self.build_range(lo, mid);
        self.build_range(mid + 1, hi);
    }

    fn widest_axis(&self, lo: usize, hi: usize) -> usize {
        let mut lower = [f64::INFINITY; D];
        let mut upper = [f64::NEG_INFINITY; D];
        for &pi in &self.order[lo..hi] {
            let p = self.points[pi as usize];
            for d in 0..D {
                lower[d] = lower[d].min(p[d]);
                upper[d] = upper[d].max(p[d]);
            }
        }
        let mut axis = 0;
        for d in 1..D {
            if upper[d] - lower[d] > upper[axis] - lower[axis] {
                axis = d;
            }
        }
        axis
    }

    /// Exact nearest neighbor of `q` as `(payload index, distance)`.
    pub fn nearest(&self, q: Point<D>) -> (usize, f64) {
        let mut best = (f64::INFINITY, u32::MAX);
        self.search(q, 0, self.points.len(), &mut best);
        (best.1 as usize, best.0.sqrt())
    }

    fn search(&self, q: Point<D>, lo: usize, hi: usize, best: &mut (f64, u32)) {
        if hi <= lo {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let payload = self.order[mid];
        let d2 = (q - self.points[payload as usize]).norm_sq();
        if d2 < best.0 || (d2 == best.0 && payload < best.1) {
            *best = (d2, payload);
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let delta = q[axis] - self.points[payload as usize][axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, best);
        // An equally distant point may sit on the far side; ties matter, so
        // the prune is strict.
        if delta * delta <= best.0 {
            self.search(q, far.0, far.1, best);
        }
    }
}
