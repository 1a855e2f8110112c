//! Marching squares over a 2D scalar grid, with segment stitching into
//! connected contour components.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::extract::{edge_crossing, quad_segments, ScalarFieldGrid};
use crate::geometry::Point;

/// One connected contour component; `vertices` never repeats consecutive
/// points, and a closed component does not repeat its first vertex at the
/// end.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline2 {
    pub vertices: Vec<Point<2>>,
    pub closed: bool,
}

/// Grid-edge key: `axis` (0 = along x, 1 = along y) plus the lattice index
/// of the edge's lower endpoint.
#[inline]
fn edge_key(axis: u8, i: usize, j: usize) -> u64 {
    (axis as u64) << 42 | (i as u64) << 21 | j as u64
}

#[inline]
fn edge_decode(key: u64) -> (u8, usize, usize) {
    (
        (key >> 42) as u8,
        (key >> 21 & 0x1f_ffff) as usize,
        (key & 0x1f_ffff) as usize,
    )
}

/// Contours `{field = iso}` by marching squares with linear interpolation
/// along crossed edges; diagonal cells are disambiguated by the cell-corner
/// average. Components come back closed unless they leave the grid.
pub fn extract_iso_2d(field: &ScalarFieldGrid<2>, iso: f64) -> Result<Vec<Polyline2>> {
    if !(iso.is_finite() && iso > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "iso level must be positive, got {iso}"
        )));
    }
    let res = field.grid.res;

    // Quad edge id -> grid edge key for the cell at (i, j).
    let cell_edge = |i: usize, j: usize, e: u8| -> u64 {
        match e {
            0 => edge_key(0, i, j),
            1 => edge_key(1, i + 1, j),
            2 => edge_key(0, i, j + 1),
            _ => edge_key(1, i, j),
        }
    };

    let mut adjacency: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for i in 0..res[0] - 1 {
        for j in 0..res[1] - 1 {
            let vals = [
                field.at([i, j]),
                field.at([i + 1, j]),
                field.at([i + 1, j + 1]),
                field.at([i, j + 1]),
            ];
            let (segs, n) = quad_segments(vals, iso);
            for &(a, b) in &segs[..n] {
                let (ka, kb) = (cell_edge(i, j, a), cell_edge(i, j, b));
                adjacency.entry(ka).or_default().push(kb);
                adjacency.entry(kb).or_default().push(ka);
            }
        }
    }
    for neighbors in adjacency.values_mut() {
        debug_assert!(neighbors.len() <= 2);
        neighbors.sort_unstable();
    }

    let vertex_of = |key: u64| -> Point<2> {
        let (axis, i, j) = edge_decode(key);
        let mut b = [i, j];
        b[axis as usize] += 1;
        edge_crossing(
            &field.grid,
            [i, j],
            axis as usize,
            field.at([i, j]),
            field.at(b),
            iso,
        )
    };

    let mut visited: HashSet<u64> = HashSet::new();
    let mut components = Vec::new();
    let mut emit = |chain: &[u64], closed: bool| {
        let mut vertices: Vec<Point<2>> = Vec::with_capacity(chain.len());
        for &key in chain {
            let v = vertex_of(key);
            if vertices.last() != Some(&v) {
                vertices.push(v);
            }
        }
        if closed && vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if (closed && vertices.len() >= 3) || (!closed && vertices.len() >= 2) {
            components.push(Polyline2 { vertices, closed });
        }
    };

    let walk = |start: u64, visited: &mut HashSet<u64>| -> (Vec<u64>, bool) {
        let mut chain = vec![start];
        visited.insert(start);
        let mut prev = u64::MAX;
        let mut cur = start;
        loop {
            let next = adjacency[&cur].iter().copied().find(|&n| n != prev);
            match next {
                None => return (chain, false),
                Some(n) if n == start => return (chain, true),
                Some(n) => {
                    chain.push(n);
                    visited.insert(n);
                    prev = cur;
                    cur = n;
                }
            }
        }
    };

    // Open chains first, each anchored at a degree-1 edge on the grid rim.
    let endpoints: Vec<u64> = adjacency
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(&k, _)| k)
        .collect();
    for start in endpoints {
        if !visited.contains(&start) {
            let (chain, closed) = walk(start, &mut visited);
            emit(&chain, closed);
        }
    }
    // What remains are closed loops.
    let loop_starts: Vec<u64> = adjacency.keys().copied().collect();
    for start in loop_starts {
        if !visited.contains(&start) {
            let (chain, closed) = walk(start, &mut visited);
            emit(&chain, closed);
        }
    }
    Ok(components)
}

/// Writes contours as CSV rows `component_id,x,y`, components in order.
pub fn write_contours_csv(contours: &[Polyline2], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "component_id,x,y")?;
    for (id, c) in contours.iter().enumerate() {
        for v in &c.vertices {
            writeln!(w, "{},{},{}", id, v[0], v[1])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::sample_multilinear;
    use crate::geometry::AxisGrid;

    fn circle_udf(res: usize) -> ScalarFieldGrid<2> {
        let grid = AxisGrid::<2>::cube(1.0, res).unwrap();
        let values = grid
            .points()
            .iter()
            .map(|p| (p.norm() - 0.5).abs())
            .collect();
        ScalarFieldGrid::new(grid, values).unwrap()
    }

    #[test]
    fn circle_band_yields_two_closed_rings_in_the_band() {
        let udf = circle_udf(512);
        let iso = 5e-3;
        let contours = extract_iso_2d(&udf, iso).unwrap();
        assert_eq!(contours.len(), 2, "expected inner and outer ring");
        let cell = 2.0 / 511.0;
        let diagonal = cell * 2f64.sqrt();
        for c in &contours {
            assert!(c.closed);
            assert!(c.vertices.len() > 100);
            for v in &c.vertices {
                let radial = (v.norm() - 0.5).abs();
                assert!(
                    (radial - iso).abs() <= diagonal,
                    "vertex at radial offset {radial}"
                );
                let interp = sample_multilinear(&udf, *v);
                assert!((interp - iso).abs() < 1e-6, "interpolated {interp}");
            }
            for pair in c.vertices.windows(2) {
                assert_ne!(pair[0], pair[1]);
            }
        }
    }

    #[test]
    fn iso_outside_the_value_range_gives_no_contours() {
        let udf = circle_udf(64);
        assert!(extract_iso_2d(&udf, 100.0).unwrap().is_empty());
        let grid = AxisGrid::<2>::cube(1.0, 8).unwrap();
        let constant = ScalarFieldGrid::new(grid, vec![0.2; 64]).unwrap();
        assert!(extract_iso_2d(&constant, 0.5).unwrap().is_empty());
    }

    #[test]
    fn non_positive_iso_is_rejected() {
        let udf = circle_udf(16);
        assert!(extract_iso_2d(&udf, 0.0).is_err());
        assert!(extract_iso_2d(&udf, -1.0).is_err());
    }

    #[test]
    fn contours_leaving_the_grid_come_back_open() {
        // A vertical slab centered on x = 0: the band boundary runs off the
        // top and bottom of the grid, so both crossings are open chains.
        let grid = AxisGrid::<2>::cube(1.0, 33).unwrap();
        let values = grid.points().iter().map(|p| p[0].abs()).collect();
        let udf = ScalarFieldGrid::new(grid, values).unwrap();
        let contours = extract_iso_2d(&udf, 0.4).unwrap();
        assert_eq!(contours.len(), 2);
        for c in &contours {
            assert!(!c.closed);
            for v in &c.vertices {
                assert!((v[0].abs() - 0.4).abs() < 1e-9);
            }
            let spread = c.vertices.last().unwrap()[1] - c.vertices[0][1];
            assert!(spread.abs() > 1.9, "chain should span the grid");
        }
    }

    #[test]
    fn extraction_commutes_with_constant_shifts_exactly() {
        // Values are quantized to multiples of 2^-10 so that adding the
        // shift is exact and the comparison can be bitwise.
        let grid = AxisGrid::<2>::cube(1.0, 65).unwrap();
        let values = grid
            .points()
            .iter()
            .map(|p| ((p.norm() - 0.5).abs() * 1024.0).round() / 1024.0)
            .collect();
        let udf = ScalarFieldGrid::new(grid, values).unwrap();
        let shift = 0.5;
        let shifted = ScalarFieldGrid::new(
            udf.grid,
            udf.values.iter().map(|v| v + shift).collect(),
        )
        .unwrap();
        let iso = 0.125;
        let base = extract_iso_2d(&udf, iso).unwrap();
        let moved = extract_iso_2d(&shifted, iso + shift).unwrap();
        assert_eq!(base.len(), moved.len());
        assert!(!base.is_empty());
        for (a, b) in base.iter().zip(moved.iter()) {
            assert_eq!(a.closed, b.closed);
            assert_eq!(a.vertices.len(), b.vertices.len());
            for (va, vb) in a.vertices.iter().zip(b.vertices.iter()) {
                assert_eq!(va[0].to_bits(), vb[0].to_bits());
                assert_eq!(va[1].to_bits(), vb[1].to_bits());
            }
        }
    }

    #[test]
    fn saddle_cells_split_according_to_the_center_average() {
        // One cell over [0,1]^2 with the low corner (0,0) and high corner
        // (1,1) inside. Values are stored in linear order v[0,0], v[0,1],
        // v[1,0], v[1,1].
        let grid = AxisGrid::<2>::new(Point([0.0, 0.0]), Point([1.0, 1.0]), [2, 2]).unwrap();
        let partner_of_bottom = |field: &ScalarFieldGrid<2>| -> Point<2> {
            let contours = extract_iso_2d(field, 0.5).unwrap();
            assert_eq!(contours.len(), 2, "saddle cell must split into two chains");
            let chain = contours
                .iter()
                .find(|c| c.vertices.iter().any(|v| v[1] == 0.0))
                .expect("one chain crosses the bottom edge");
            assert_eq!(chain.vertices.len(), 2);
            *chain.vertices.iter().find(|v| v[1] != 0.0).unwrap()
        };

        // Average 0.55 is outside: the inside corners stay separate, so the
        // bottom crossing pairs with the left edge around corner (0,0).
        let separated = ScalarFieldGrid::new(grid, vec![0.2, 0.9, 0.8, 0.3]).unwrap();
        assert_eq!(partner_of_bottom(&separated)[0], 0.0);

        // Average 0.3625 is inside: the inside corners connect, so the
        // bottom crossing pairs with the right edge around corner (1,0).
        let joined = ScalarFieldGrid::new(grid, vec![0.1, 0.6, 0.55, 0.2]).unwrap();
        assert_eq!(partner_of_bottom(&joined)[0], 1.0);
    }

    #[test]
    fn exact_node_crossings_do_not_duplicate_vertices() {
        // The iso level passes exactly through the center node.
        let grid = AxisGrid::<2>::cube(1.0, 3).unwrap();
        let values = grid.points().iter().map(|p| p[0].abs() + p[1].abs()).collect();
        let udf = ScalarFieldGrid::new(grid, values).unwrap();
        let contours = extract_iso_2d(&udf, 1.0).unwrap();
        for c in &contours {
            for pair in c.vertices.windows(2) {
                assert_ne!(pair[0], pair[1]);
            }
            if c.closed {
                assert_ne!(c.vertices.first(), c.vertices.last());
            }
        }
    }

    #[test]
    fn contour_csv_lists_components_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let contours = vec![
            Polyline2 {
                vertices: vec![Point([0.0, 1.0]), Point([2.0, 3.0])],
                closed: false,
            },
            Polyline2 {
                vertices: vec![Point([4.0, 5.0])],
                closed: false,
            },
        ];
        let path = dir.path().join("contours.csv");
        write_contours_csv(&contours, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["component_id,x,y", "0,0,1", "0,2,3", "1,4,5"]);
    }
}
