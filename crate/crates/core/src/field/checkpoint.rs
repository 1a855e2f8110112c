//! Binary network checkpoints: magic, layer dims, omega0, raw f64 payload.
//!
//! Layout, all little-endian:
//! `"S2DF1"` (5 bytes), layer count u32, input dim u32, omega0 f64, then per
//! layer `rows u32, cols u32`, then per layer the row-major weight block
//! followed by the bias block as f64s.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::net::{LayerParams, SirenNet};

const MAGIC: &[u8; 5] = b"S2DF1";
const MAX_DIM: u32 = 1 << 20;

/// Writes `net` to `path`, truncating any existing file.
pub fn save_checkpoint(net: &SirenNet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    w.write_all(&(net.input_dim as u32).to_le_bytes())?;
    w.write_all(&net.omega0.to_le_bytes())?;
    for layer in &net.layers {
        w.write_all(&(layer.rows as u32).to_le_bytes())?;
        w.write_all(&(layer.cols as u32).to_le_bytes())?;
    }
    for layer in &net.layers {
        for v in layer.w.iter().chain(layer.b.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint written by `save_checkpoint`, validating shape chain
/// and finiteness.
pub fn load_checkpoint(path: &Path) -> Result<SirenNet> {
    let mut r = BufReader::new(File::open(path)?);
    let fail = |detail: String| Error::Parse {
        path: path.display().to_string(),
        detail,
    };

    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|e| fail(format!("missing header: {e}")))?;
    if &magic != MAGIC {
        return Err(fail(format!("bad magic bytes {magic:?}")));
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let n_layers = read_u32(&mut r)?;
    let input_dim = read_u32(&mut r)?;
    if n_layers == 0 || n_layers > 1024 || input_dim == 0 || input_dim > MAX_DIM {
        return Err(fail(format!(
            "implausible header: {n_layers} layers, input dim {input_dim}"
        )));
    }
    r.read_exact(&mut f64buf)?;
    let omega0 = f64::from_le_bytes(f64buf);
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(fail(format!("omega0 {omega0} not positive finite")));
    }

    let mut dims = Vec::with_capacity(n_layers as usize);
    for _ in 0..n_layers {
        let rows = read_u32(&mut r)?;
        let cols = read_u32(&mut r)?;
        if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
            return Err(fail(format!("implausible layer shape {rows}x{cols}")));
        }
        dims.push((rows as usize, cols as usize));
    }
    let mut prev = input_dim as usize;
    for &(rows, cols) in &dims {
        if cols != prev {
            return Err(fail(format!(
                "layer expects {cols} inputs but previous width is {prev}"
            )));
        }
        prev = rows;
    }
    if prev != 1 {
        return Err(fail(format!("final layer width {prev}, expected 1")));
    }

    let mut layers = Vec::with_capacity(dims.len());
    for (rows, cols) in dims {
        let mut w = vec![0.0f64; rows * cols];
        let mut b = vec![0.0f64; rows];
        for v in w.iter_mut().chain(b.iter_mut()) {
            r.read_exact(&mut f64buf)?;
            *v = f64::from_le_bytes(f64buf);
            if !v.is_finite() {
                return Err(fail("non-finite parameter in payload".into()));
            }
        }
        layers.push(LayerParams { w, b, rows, cols });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(fail("trailing bytes after payload".into()));
    }
    Ok(SirenNet {
        layers,
        omega0,
        input_dim: input_dim as usize,
    })
}
