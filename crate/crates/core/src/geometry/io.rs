//! Point-cloud and mesh file I/O.
//!
//! Clouds: whitespace-separated text (`x y z` or `x y`, optional trailing
//! normal columns) and PLY (ASCII or binary little-endian). Meshes: OBJ and
//! ASCII PLY write, plus a minimal OBJ reader so extracted surfaces can be
//! scored later.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud, TriangleMesh};

fn parse_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Reads a cloud from `path`, dispatching on the `.ply` extension; anything
/// else is treated as whitespace-separated text.
pub fn read_cloud<const D: usize>(path: &Path) -> Result<PointCloud<D>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("ply") => read_cloud_ply(path),
        _ => read_cloud_text(path),
    }
}

/// Text cloud reader: one point per line, `#` starts a comment, each line has
/// either `D` columns (positions) or `2*D` (positions then normals).
pub fn read_cloud_text<const D: usize>(path: &Path) -> Result<PointCloud<D>> {
    let file = File::open(path)?;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut with_normals: Option<bool> = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, format!("line {}: {}", lineno + 1, e)))?;
        let has_n = match cols.len() {
            n if n == D => false,
            n if n == 2 * D => true,
            n => {
                return Err(parse_err(
                    path,
                    format!("line {}: expected {} or {} columns, got {}", lineno + 1, D, 2 * D, n),
                ))
            }
        };
        match with_normals {
            None => with_normals = Some(has_n),
            Some(w) if w != has_n => {
                return Err(parse_err(
                    path,
                    format!("line {}: inconsistent column count", lineno + 1),
                ))
            }
            _ => {}
        }
        let mut p = Point::ZERO;
        for d in 0..D {
            p[d] = cols[d];
        }
        points.push(p);
        if has_n {
            let mut n = Point::ZERO;
            for d in 0..D {
                n[d] = cols[D + d];
            }
            normals.push(n);
        }
    }
    PointCloud::new(points, if with_normals == Some(true) { Some(normals) } else { None })
}

/// Writes a cloud in the text format accepted by [`read_cloud_text`].
pub fn write_cloud_text<const D: usize>(path: &Path, cloud: &PointCloud<D>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, p) in cloud.points.iter().enumerate() {
        for d in 0..D {
            if d > 0 {
                write!(w, " ")?;
            }
            write!(w, "{}", p[d])?;
        }
        if let Some(ns) = &cloud.normals {
            for d in 0..D {
                write!(w, " {}", ns[i][d])?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum PlyScalar {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl PlyScalar {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok {
            "float" | "float32" => PlyScalar::F32,
            "double" | "float64" => PlyScalar::F64,
            "char" | "int8" => PlyScalar::I8,
            "uchar" | "uint8" => PlyScalar::U8,
            "short" | "int16" => PlyScalar::I16,
            "ushort" | "uint16" => PlyScalar::U16,
            "int" | "int32" => PlyScalar::I32,
            "uint" | "uint32" => PlyScalar::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyScalar::I8 | PlyScalar::U8 => 1,
            PlyScalar::I16 | PlyScalar::U16 => 2,
            PlyScalar::F32 | PlyScalar::I32 | PlyScalar::U32 => 4,
            PlyScalar::F64 => 8,
        }
    }

    fn read_le(self, buf: &[u8]) -> f64 {
        match self {
            PlyScalar::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            PlyScalar::F64 => f64::from_le_bytes(buf[..8].try_into().unwrap()),
            PlyScalar::I8 => buf[0] as i8 as f64,
            PlyScalar::U8 => buf[0] as f64,
            PlyScalar::I16 => i16::from_le_bytes(buf[..2].try_into().unwrap()) as f64,
            PlyScalar::U16 => u16::from_le_bytes(buf[..2].try_into().unwrap()) as f64,
            PlyScalar::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            PlyScalar::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
        }
    }
}

/// PLY cloud reader. Understands ASCII and binary little-endian files whose
/// first element is `vertex`; extra vertex properties are skipped and any
/// trailing elements (faces included) are ignored.
pub fn read_cloud_ply<const D: usize>(path: &Path) -> Result<PointCloud<D>> {
    let mut reader = BufReader::new(File::open(path)?);

    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(parse_err(path, "missing ply magic"));
    }

    let mut ascii = None;
    let mut vertex_count: Option<usize> = None;
    let mut props: Vec<(String, PlyScalar)> = Vec::new();
    let mut in_vertex_element = false;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(parse_err(path, "header ended before end_header"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", kind, _version] => {
                ascii = Some(match *kind {
                    "ascii" => true,
                    "binary_little_endian" => false,
                    other => {
                        return Err(parse_err(path, format!("unsupported format {}", other)))
                    }
                });
            }
            ["element", "vertex", n] => {
                if vertex_count.is_some() {
                    return Err(parse_err(path, "duplicate vertex element"));
                }
                vertex_count = Some(
                    n.parse()
                        .map_err(|_| parse_err(path, "bad vertex count"))?,
                );
                in_vertex_element = true;
            }
            ["element", ..] => {
                if vertex_count.is_none() {
                    return Err(parse_err(path, "vertex element must come first"));
                }
                in_vertex_element = false;
            }
            ["property", "list", ..] => {
                if in_vertex_element {
                    return Err(parse_err(path, "list property on vertices unsupported"));
                }
            }
            ["property", ty, name] => {
                if in_vertex_element {
                    let scalar = PlyScalar::parse(ty)
                        .ok_or_else(|| parse_err(path, format!("unknown type {}", ty)))?;
                    props.push((name.to_string(), scalar));
                }
            }
            _ => return Err(parse_err(path, format!("bad header line: {}", line.trim()))),
        }
    }

    let ascii = ascii.ok_or_else(|| parse_err(path, "missing format line"))?;
    let count = vertex_count.ok_or_else(|| parse_err(path, "missing vertex element"))?;

    let axis_names = ["x", "y", "z"];
    let normal_names = ["nx", "ny", "nz"];
    let find = |name: &str| props.iter().position(|(n, _)| n == name);
    let mut pos_idx = [0usize; D];
    for d in 0..D {
        pos_idx[d] = find(axis_names[d])
            .ok_or_else(|| parse_err(path, format!("missing property {}", axis_names[d])))?;
    }
    let normal_idx: Option<[usize; D]> = {
        let found: Vec<Option<usize>> = (0..D).map(|d| find(normal_names[d])).collect();
        if found.iter().all(|f| f.is_some()) {
            let mut idx = [0usize; D];
            for d in 0..D {
                idx[d] = found[d].unwrap();
            }
            Some(idx)
        } else {
            None
        }
    };

    let mut points = Vec::with_capacity(count);
    let mut normals = normal_idx.map(|_| Vec::with_capacity(count));
    if ascii {
        let mut done = 0;
        while done < count {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(parse_err(path, "vertex data ended early"));
            }
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(path, format!("vertex {}: {}", done, e)))?;
            if vals.len() < props.len() {
                return Err(parse_err(path, format!("vertex {}: too few values", done)));
            }
            push_vertex::<D>(&vals, &pos_idx, &normal_idx, &mut points, &mut normals);
            done += 1;
        }
    } else {
        let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
        let offsets: Vec<usize> = props
            .iter()
            .scan(0usize, |acc, (_, s)| {
                let here = *acc;
                *acc += s.size();
                Some(here)
            })
            .collect();
        let mut buf = vec![0u8; stride];
        for _ in 0..count {
            reader
                .read_exact(&mut buf)
                .map_err(|_| parse_err(path, "binary vertex data ended early"))?;
            let vals: Vec<f64> = props
                .iter()
                .zip(&offsets)
                .map(|((_, s), &off)| s.read_le(&buf[off..]))
                .collect();
            push_vertex::<D>(&vals, &pos_idx, &normal_idx, &mut points, &mut normals);
        }
    }

    PointCloud::new(points, normals)
}

fn push_vertex<const D: usize>(
    vals: &[f64],
    pos_idx: &[usize; D],
    normal_idx: &Option<[usize; D]>,
    points: &mut Vec<Point<D>>,
    normals: &mut Option<Vec<Point<D>>>,
) {
    let mut p = Point::ZERO;
    for d in 0..D {
        p[d] = vals[pos_idx[d]];
    }
    points.push(p);
    if let (Some(idx), Some(ns)) = (normal_idx, normals) {
        let mut n = Point::ZERO;
        for d in 0..D {
            n[d] = vals[idx[d]];
        }
        ns.push(n);
    }
}

/// Writes a mesh as OBJ (1-based face indices).
pub fn write_mesh_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Minimal OBJ reader: `v` and `f` records, `v/vt/vn` references reduced to
/// the vertex index, faces with more than three corners fanned out.
pub fn read_mesh_obj(path: &Path) -> Result<TriangleMesh> {
    let file = File::open(path)?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut v = [0.0; 3];
                for slot in &mut v {
                    *slot = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, format!("line {}: bad vertex", lineno + 1)))?;
                }
                vertices.push(Point(v));
            }
            Some("f") => {
                let idx: Vec<u32> = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse::<i64>().ok().and_then(|i| {
                            if i >= 1 {
                                Some((i - 1) as u32)
                            } else {
                                None
                            }
                        })
                    })
                    .collect::<Option<_>>()
                    .ok_or_else(|| parse_err(path, format!("line {}: bad face", lineno + 1)))?;
                if idx.len() < 3 {
                    return Err(parse_err(path, format!("line {}: face needs 3 corners", lineno + 1)));
                }
                for i in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Writes a mesh as ASCII PLY.
pub fn write_mesh_ply(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "element face {}", mesh.faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    for f in &mesh.faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}
