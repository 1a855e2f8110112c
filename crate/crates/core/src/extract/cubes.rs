//! Marching cubes over a 3D scalar grid.
//!
//! Each cell's surface patches are built by contouring the six cube faces
//! with the shared quad rule and joining the resulting segments into closed
//! loops, which are then fan-triangulated from an edge vertex. Because both
//! cells sharing a face cut it with identical segments (including the
//! corner-average rule on ambiguous faces), patch boundaries always match
//! and the extracted shell has no cracks.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extract::{edge_crossing, quad_segments, ScalarFieldGrid};
use crate::geometry::{Point, TriangleMesh};

/// Cube-local edge id: `axis * 4 + sub`, where `sub` packs the lower-end
/// vertex's bits on the two free axes in ascending axis order.
#[inline]
fn local_edge(axis: usize, vert: u8) -> u8 {
    let (f0, f1) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    (axis * 4) as u8 + (vert >> f0 & 1) + 2 * (vert >> f1 & 1)
}

/// Lower-end local vertex of a cube-local edge.
#[inline]
fn edge_vertex_bits(edge: u8) -> (usize, u8) {
    let axis = (edge / 4) as usize;
    let sub = edge % 4;
    let (f0, f1) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    (axis, (sub & 1) << f0 | (sub >> 1) << f1)
}

#[inline]
fn global_edge(axis: usize, node: [usize; 3]) -> u64 {
    (axis as u64) << 60 | (node[0] as u64) << 40 | (node[1] as u64) << 20 | node[2] as u64
}

#[inline]
fn decode_global(key: u64) -> (usize, [usize; 3]) {
    (
        (key >> 60) as usize,
        [
            (key >> 40 & 0xf_ffff) as usize,
            (key >> 20 & 0xf_ffff) as usize,
            (key & 0xf_ffff) as usize,
        ],
    )
}

/// Emits the fan triangles of one cell as global-edge triples.
fn polygonize_cell(
    field: &ScalarFieldGrid<3>,
    iso: f64,
    cell: [usize; 3],
    out: &mut Vec<[u64; 3]>,
) {
    let mut vals = [0.0f64; 8];
    let mut inside_count = 0;
    for v in 0..8u8 {
        let idx = [
            cell[0] + (v & 1) as usize,
            cell[1] + (v >> 1 & 1) as usize,
            cell[2] + (v >> 2 & 1) as usize,
        ];
        vals[v as usize] = field.at(idx);
        inside_count += (vals[v as usize] < iso) as u8;
    }
    if inside_count == 0 || inside_count == 8 {
        return;
    }

    let mut adj = [[u8::MAX; 2]; 12];
    let mut deg = [0u8; 12];
    for n in 0..3usize {
        let (p, q) = match n {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for s in 0..2u8 {
            let corner = |pm: u8, qm: u8| -> u8 { s << n | pm << p | qm << q };
            let fvals = [
                vals[corner(0, 0) as usize],
                vals[corner(1, 0) as usize],
                vals[corner(1, 1) as usize],
                vals[corner(0, 1) as usize],
            ];
            let (segs, cnt) = quad_segments(fvals, iso);
            let fedge = |e: u8| -> u8 {
                match e {
                    0 => local_edge(p, corner(0, 0)),
                    1 => local_edge(q, corner(1, 0)),
                    2 => local_edge(p, corner(0, 1)),
                    _ => local_edge(q, corner(0, 0)),
                }
            };
            for &(a, b) in &segs[..cnt] {
                let (la, lb) = (fedge(a) as usize, fedge(b) as usize);
                adj[la][deg[la] as usize] = lb as u8;
                deg[la] += 1;
                adj[lb][deg[lb] as usize] = la as u8;
                deg[lb] += 1;
            }
        }
    }
    debug_assert!(deg.iter().all(|&d| d == 0 || d == 2));

    let global = |edge: u8| -> u64 {
        let (axis, bits) = edge_vertex_bits(edge);
        global_edge(
            axis,
            [
                cell[0] + (bits & 1) as usize,
                cell[1] + (bits >> 1 & 1) as usize,
                cell[2] + (bits >> 2 & 1) as usize,
            ],
        )
    };

    let mut visited = 0u16;
    for start in 0..12u8 {
        if deg[start as usize] == 0 || visited >> start & 1 == 1 {
            continue;
        }
        let mut ring = [0u8; 12];
        let mut len = 0;
        let mut prev = u8::MAX;
        let mut cur = start;
        loop {
            ring[len] = cur;
            len += 1;
            visited |= 1 << cur;
            let next = if adj[cur as usize][0] != prev {
                adj[cur as usize][0]
            } else {
                adj[cur as usize][1]
            };
            if next == start {
                break;
            }
            prev = cur;
            cur = next;
        }
        let anchor = global(ring[0]);
        for m in 1..len - 1 {
            out.push([anchor, global(ring[m]), global(ring[m + 1])]);
        }
    }
}

/// Extracts the iso-surface `{field = iso}`, welds vertices within 1e-9,
/// and drops triangles of area below 1e-12. Contouring a UDF at a positive
/// offset yields a double-cover shell; that is the intended output.
pub fn extract_iso_3d(field: &ScalarFieldGrid<3>, iso: f64) -> Result<TriangleMesh> {
    if !(iso.is_finite() && iso > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "iso level must be positive, got {iso}"
        )));
    }
    let res = field.grid.res;

    let slabs: Vec<Vec<[u64; 3]>> = (0..res[0] - 1)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..res[1] - 1 {
                for k in 0..res[2] - 1 {
                    polygonize_cell(field, iso, [i, j, k], &mut out);
                }
            }
            out
        })
        .collect();

    // Edge-keyed vertices: both cells sharing an edge interpolate the same
    // crossing bit-for-bit.
    let mut edge_vid: HashMap<u64, u32> = HashMap::new();
    let mut vertices: Vec<Point<3>> = Vec::new();
    let mut raw_faces: Vec<[u32; 3]> = Vec::new();
    for tri in slabs.iter().flatten() {
        let mut face = [0u32; 3];
        for (slot, &key) in tri.iter().enumerate() {
            let vid = *edge_vid.entry(key).or_insert_with(|| {
                let (axis, node) = decode_global(key);
                let mut upper = node;
                upper[axis] += 1;
                let p = edge_crossing(
                    &field.grid,
                    node,
                    axis,
                    field.at(node),
                    field.at(upper),
                    iso,
                );
                vertices.push(p);
                (vertices.len() - 1) as u32
            });
            face[slot] = vid;
        }
        raw_faces.push(face);
    }

    // Weld coincident vertices (distinct edges can interpolate onto the same
    // grid node), then drop collapsed and sliver triangles.
    let mut canon: HashMap<[i64; 3], u32> = HashMap::new();
    let mut remap: Vec<u32> = Vec::with_capacity(vertices.len());
    for (vi, p) in vertices.iter().enumerate() {
        let key = [
            (p[0] * 1e9).round() as i64,
            (p[1] * 1e9).round() as i64,
            (p[2] * 1e9).round() as i64,
        ];
        remap.push(*canon.entry(key).or_insert(vi as u32));
    }

    let mut keep: Vec<u32> = vec![u32::MAX; vertices.len()];
    let mut final_vertices: Vec<Point<3>> = Vec::new();
    let mut final_faces: Vec<[u32; 3]> = Vec::new();
    for f in &raw_faces {
        let mapped = [
            remap[f[0] as usize],
            remap[f[1] as usize],
            remap[f[2] as usize],
        ];
        if mapped[0] == mapped[1] || mapped[1] == mapped[2] || mapped[0] == mapped[2] {
            continue;
        }
        let [a, b, c] = mapped.map(|m| vertices[m as usize]);
        if (b - a).cross(c - a).norm() * 0.5 < 1e-12 {
            continue;
        }
        let mut face = [0u32; 3];
        for (slot, m) in mapped.iter().enumerate() {
            if keep[*m as usize] == u32::MAX {
                keep[*m as usize] = final_vertices.len() as u32;
                final_vertices.push(vertices[*m as usize]);
            }
            face[slot] = keep[*m as usize];
        }
        final_faces.push(face);
    }
    TriangleMesh::new(final_vertices, final_faces)
}
