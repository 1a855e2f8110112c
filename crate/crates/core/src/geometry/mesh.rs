//! Triangle meshes and area-uniform surface sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

/// Indexed triangle soup. Faces are stored counter-clockwise as produced by
/// extraction; the field is unsigned so orientation only matters through the
/// absolute cosine used in normal consistency.
#[derive(Clone, Debug, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Point<3>>,
    pub faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point<3>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        for f in &faces {
            if f[0] >= n || f[1] >= n || f[2] >= n {
                return Err(Error::DegenerateInput(format!(
                    "face {:?} references a vertex beyond count {}",
                    f, n
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateInput(format!(
                    "face {:?} repeats a vertex index",
                    f
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    #[inline]
    pub fn face_corners(&self, f: usize) -> [Point<3>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    #[inline]
    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_corners(f);
        (b - a).cross(c - a).norm() * 0.5
    }

    /// Unit normal of face `f`; `None` for degenerate faces.
    #[inline]
    pub fn face_normal(&self, f: usize) -> Option<Point<3>> {
        let [a, b, c] = self.face_corners(f);
        (b - a).cross(c - a).normalized(1e-300)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Splits the mesh into connected components (faces joined through shared
    /// vertices). Unreferenced vertices are dropped.
    pub fn components(&self) -> Vec<TriangleMesh> {
        let mut parent: Vec<u32> = (0..self.vertices.len() as u32).collect();
        fn find(parent: &mut [u32], mut v: u32) -> u32 {
            while parent[v as usize] != v {
                parent[v as usize] = parent[parent[v as usize] as usize];
                v = parent[v as usize];
            }
            v
        }
        for f in &self.faces {
            let r0 = find(&mut parent, f[0]);
            let r1 = find(&mut parent, f[1]);
            parent[r1 as usize] = r0;
            let r2 = find(&mut parent, f[2]);
            parent[r2 as usize] = r0;
        }

        // Group faces by root, in first-seen order for determinism.
        let mut root_order: Vec<u32> = Vec::new();
        let mut groups: std::collections::HashMap<u32, Vec<usize>> =
            std::collections::HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let r = find(&mut parent, f[0]);
            groups.entry(r).or_insert_with(|| {
                root_order.push(r);
                Vec::new()
            });
            groups.get_mut(&r).unwrap().push(fi);
        }

        let mut out = Vec::new();
        for r in root_order {
            let face_ids = &groups[&r];
            let mut remap: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
            let mut vertices = Vec::new();
            let mut faces = Vec::with_capacity(face_ids.len());
            for &fi in face_ids {
                let mut nf = [0u32; 3];
                for (slot, &v) in self.faces[fi].iter().enumerate() {
                    let nv = *remap.entry(v).or_insert_with(|| {
                        vertices.push(self.vertices[v as usize]);
                        (vertices.len() - 1) as u32
                    });
                    nf[slot] = nv;
                }
                faces.push(nf);
            }
            out.push(TriangleMesh { vertices, faces });
        }
        out
    }

    /// V - E + F with edges counted once regardless of orientation.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }
}

/// Draws `n` points uniformly by area: each face is chosen with probability
/// proportional to its area, then a uniform barycentric point is taken on it.
/// Every sample carries its face's unit normal. Deterministic for a fixed seed.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud<3>> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateInput(
            "mesh has zero total area, nothing to sample".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    while points.len() < n {
        let target = rng.gen_range(0.0..total);
        let f = cumulative.partition_point(|&c| c <= target);
        let Some(normal) = mesh.face_normal(f) else {
            // Zero-area faces occupy zero probability mass; a hit can only
            // come from rounding at a partition boundary. Redraw.
            continue;
        };
        let [a, b, c] = mesh.face_corners(f);
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        points.push(a * wa + b * wb + c * wc);
        normals.push(normal);
    }

    Ok(PointCloud {
        points,
        normals: Some(normals),
    })
}
