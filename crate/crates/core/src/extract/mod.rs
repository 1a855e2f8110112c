//! Iso-contour and iso-surface extraction from sampled scalar fields.
//!
//! The learned field is evaluated on a regular grid, converted to an
//! unsigned distance via `sqrt(max(v, 0) / K)`, and contoured at a small
//! positive offset. Contouring a UDF at `iso > 0` yields a thin double
//! cover around the zero set; that is accepted by design and absorbed by
//! the metric thresholds downstream.

mod cubes;
mod squares;

pub use cubes::extract_iso_3d;
pub use squares::{extract_iso_2d, write_contours_csv, Polyline2};

use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::SirenNet;
use crate::geometry::{AxisGrid, Point};

/// Offset at which iso-contours are extracted by default.
pub const DEFAULT_ISO: f64 = 5e-3;

/// A scalar field sampled on an [`AxisGrid`], values in linear-index order.
#[derive(Clone, Debug)]
pub struct ScalarFieldGrid<const D: usize> {
    pub grid: AxisGrid<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> ScalarFieldGrid<D> {
    /// Validates length and finiteness.
    pub fn new(grid: AxisGrid<D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::DegenerateInput(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.num_points()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure {
                term: "field_grid",
                detail: "non-finite sample in grid values".into(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Value at lattice index `idx`.
    #[inline]
    pub fn at(&self, idx: [usize; D]) -> f64 {
        self.values[self.grid.linear_index(idx)]
    }
}

/// Evaluates the network at every lattice point, in parallel. Values use the
/// same scalar forward pass as jet evaluation, so spot checks against it are
/// bit-exact.
pub fn evaluate_grid<const D: usize>(
    net: &SirenNet,
    grid: &AxisGrid<D>,
) -> Result<ScalarFieldGrid<D>> {
    if net.input_dim != D {
        return Err(Error::InvalidConfig(format!(
            "network expects {}-dimensional input, grid is {}-dimensional",
            net.input_dim, D
        )));
    }
    let mut values = vec![0.0f64; grid.num_points()];
    values
        .par_chunks_mut(4096)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk * 4096;
            for (offset, slot) in out.iter_mut().enumerate() {
                let p = grid.point_at(grid.multi_index(base + offset));
                *slot = net.forward_value(p);
            }
        });
    ScalarFieldGrid::new(*grid, values)
}

/// Converts a squared-distance field to an unsigned distance:
/// `sqrt(max(v, 0) / K)`. Negative values are evaluation noise and clamp
/// to zero.
pub fn s2df_to_udf<const D: usize>(
    field: &ScalarFieldGrid<D>,
    k: f64,
) -> Result<ScalarFieldGrid<D>> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidConfig(format!("K must be positive, got {k}")));
    }
    let values = field.values.iter().map(|&v| (v.max(0.0) / k).sqrt()).collect();
    ScalarFieldGrid::new(field.grid, values)
}

/// Multilinear interpolation of the field at an arbitrary point; coordinates
/// are clamped to the grid.
pub fn sample_multilinear<const D: usize>(field: &ScalarFieldGrid<D>, p: Point<D>) -> f64 {
    let g = &field.grid;
    let mut cell = [0usize; D];
    let mut frac = [0.0f64; D];
    for d in 0..D {
        let u = ((p[d] - g.lower[d]) / g.step(d)).clamp(0.0, (g.res[d] - 1) as f64);
        let i = (u.floor() as usize).min(g.res[d] - 2);
        cell[d] = i;
        frac[d] = u - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..1usize << D {
        let mut w = 1.0;
        let mut idx = cell;
        for d in 0..D {
            if corner >> d & 1 == 1 {
                w *= frac[d];
                idx[d] += 1;
            } else {
                w *= 1.0 - frac[d];
            }
        }
        acc += w * field.at(idx);
    }
    acc
}

/// Dumps the field as CSV rows `i,j[,k],value` with a matching header.
pub fn write_field_csv<const D: usize>(field: &ScalarFieldGrid<D>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let axes = ["i", "j", "k", "l"];
    writeln!(w, "{},value", axes[..D].join(","))?;
    for (lin, v) in field.values.iter().enumerate() {
        let idx = field.grid.multi_index(lin);
        let cols: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        writeln!(w, "{},{}", cols.join(","), v)?;
    }
    w.flush()?;
    Ok(())
}

/// Iso-line segments across one quad of corner values, as pairs of local
/// quad-edge ids. Corners are cyclic (0 at the low corner, then around);
/// edge `j` joins corners `j` and `(j+1)%4`. "Inside" means below `iso`;
/// diagonal ambiguities are resolved by the corner average, so the two cells
/// sharing a 3D face cut it identically.
pub(crate) fn quad_segments(vals: [f64; 4], iso: f64) -> ([(u8, u8); 2], usize) {
    let inside = |v: f64| v < iso;
    let code = inside(vals[0]) as u8
        | (inside(vals[1]) as u8) << 1
        | (inside(vals[2]) as u8) << 2
        | (inside(vals[3]) as u8) << 3;
    let one = |a, b| ([(a, b), (0, 0)], 1);
    match code {
        0b0000 | 0b1111 => ([(0, 0); 2], 0),
        0b0001 | 0b1110 => one(3, 0),
        0b0010 | 0b1101 => one(0, 1),
        0b0100 | 0b1011 => one(1, 2),
        0b1000 | 0b0111 => one(2, 3),
        0b0011 | 0b1100 => one(3, 1),
        0b0110 | 0b1001 => one(0, 2),
        0b0101 => {
            if inside(0.25 * (vals[0] + vals[1] + vals[2] + vals[3])) {
                ([(0, 1), (2, 3)], 2)
            } else {
                ([(3, 0), (1, 2)], 2)
            }
        }
        0b1010 => {
            if inside(0.25 * (vals[0] + vals[1] + vals[2] + vals[3])) {
                ([(3, 0), (1, 2)], 2)
            } else {
                ([(0, 1), (2, 3)], 2)
            }
        }
        _ => unreachable!(),
    }
}

/// Crossing point on the grid edge from `a_idx` one step along `axis`,
/// assuming the iso level separates the endpoint values.
pub(crate) fn edge_crossing<const D: usize>(
    grid: &AxisGrid<D>,
    a_idx: [usize; D],
    axis: usize,
    va: f64,
    vb: f64,
    iso: f64,
) -> Point<D> {
    let pa = grid.point_at(a_idx);
    let mut b_idx = a_idx;
    b_idx[axis] += 1;
    let pb = grid.point_at(b_idx);
    let t = (iso - va) / (vb - va);
    if t == 0.0 {
        pa
    } else if t == 1.0 {
        pb
    } else {
        pa + (pb - pa) * t
    }
}
