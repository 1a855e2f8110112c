//! `extract`: evaluate a checkpoint on a grid and pull the offset surface.

use std::path::{Path, PathBuf};

use clap::Args;
use s2df_core::error::{Error, Result};
use s2df_core::extract::{
    evaluate_grid, extract_iso_2d, extract_iso_3d, s2df_to_udf, write_contours_csv,
    write_field_csv, ScalarFieldGrid, DEFAULT_ISO,
};
use s2df_core::field::load_checkpoint;
use s2df_core::geometry::io::{write_mesh_obj, write_mesh_ply};
use s2df_core::geometry::{AxisGrid, NormTransform};
use s2df_core::loss::DEFAULT_K;
use s2df_core::SirenNet;

use crate::commands::train::{push, push_path, read_transform};
use crate::config::RunConfig;

/// Evaluation grid half-extent: the normalized shape sits inside 0.9, the
/// margin leaves room for the offset shell.
pub(crate) const GRID_HALF: f64 = 1.03;

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory (defaults to the checkpoint's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file or manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid resolution per axis (default 512 in 2D, 256 in 3D).
    #[arg(long)]
    pub res: Option<usize>,
    /// Offset distance of the extracted level set.
    #[arg(long)]
    pub iso: Option<f64>,
    /// Distance-scaling constant used in training.
    #[arg(long)]
    pub k: Option<f64>,
    /// Normalization sidecar mapping outputs back to input coordinates
    /// (defaults to `transform.json` next to the checkpoint).
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Mesh output format: `obj` or `ply` (3D only).
    #[arg(long)]
    pub format: Option<String>,
    /// Also dump the sampled scalar grid as CSV.
    #[arg(long)]
    pub dump_field: bool,
}

impl ExtractArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut over = Vec::new();
        push_path(&mut over, "checkpoint", &self.checkpoint);
        push_path(&mut over, "out", &self.out);
        push(&mut over, "res", &self.res);
        push(&mut over, "iso", &self.iso);
        push(&mut over, "k", &self.k);
        push_path(&mut over, "transform", &self.transform);
        push(&mut over, "format", &self.format);
        if self.dump_field {
            over.push(("dump_field", "true".to_string()));
        }
        over
    }
}

fn load_transform_or_identity<const D: usize>(
    cfg: &RunConfig,
    checkpoint: &Path,
) -> Result<NormTransform<D>> {
    if let Some(path) = cfg.get("transform") {
        return read_transform(Path::new(path));
    }
    let sidecar = checkpoint.parent().map(|p| p.join("transform.json"));
    match sidecar.filter(|p| p.exists()) {
        Some(p) => read_transform(&p),
        None => {
            eprintln!(
                "note: no transform.json beside the checkpoint; \
                 outputs stay in normalized coordinates"
            );
            Ok(NormTransform {
                center: s2df_core::Point::ZERO,
                scale: 1.0,
            })
        }
    }
}

/// Shared per-dimension setup: grid evaluation, distance conversion, the
/// optional field dump, and the manifest.
fn evaluate_udf<const D: usize>(
    cfg: &mut RunConfig,
    net: &SirenNet,
    out: &Path,
) -> Result<(ScalarFieldGrid<D>, f64)> {
    let default_res = if D == 2 { 512 } else { 256 };
    let res = cfg.get_usize("res", default_res)?;
    let iso = cfg.get_f64("iso", DEFAULT_ISO)?;
    let k = cfg.get_f64("k", DEFAULT_K)?;

    cfg.set("res", res.to_string());
    cfg.set("iso", iso.to_string());
    cfg.set("k", k.to_string());
    cfg.write_manifest(&out.join("run.json"), "extract")?;

    let grid = AxisGrid::<D>::cube(GRID_HALF, res)?;
    let field = evaluate_grid(net, &grid)?;
    let udf = s2df_to_udf(&field, k)?;
    if cfg.get_bool("dump_field", false)? {
        write_field_csv(&field, &out.join("field.csv"))?;
    }
    Ok((udf, iso))
}

fn extract_2d(
    cfg: &mut RunConfig,
    net: &SirenNet,
    checkpoint: &Path,
    out: &Path,
) -> Result<()> {
    let transform: NormTransform<2> = load_transform_or_identity(cfg, checkpoint)?;
    let (udf, iso) = evaluate_udf::<2>(cfg, net, out)?;
    let mut contours = extract_iso_2d(&udf, iso)?;
    for line in &mut contours {
        for v in &mut line.vertices {
            *v = transform.to_original(*v);
        }
    }
    write_contours_csv(&contours, &out.join("contours.csv"))?;
    if contours.is_empty() {
        eprintln!("warning: no contour crosses the offset level");
        return Err(Error::EmptyResult("no contours at this iso level".into()));
    }
    let n_vertices: usize = contours.iter().map(|c| c.vertices.len()).sum();
    println!(
        "extracted {} contour component(s), {n_vertices} vertices, into {}",
        contours.len(),
        out.display()
    );
    Ok(())
}

fn extract_3d(
    cfg: &mut RunConfig,
    net: &SirenNet,
    checkpoint: &Path,
    out: &Path,
) -> Result<()> {
    let transform: NormTransform<3> = load_transform_or_identity(cfg, checkpoint)?;
    let format = cfg.get_string("format", "obj");
    if format != "obj" && format != "ply" {
        return Err(Error::InvalidConfig(format!(
            "unknown mesh format `{format}` (expected `obj` or `ply`)"
        )));
    }
    let (udf, iso) = evaluate_udf::<3>(cfg, net, out)?;
    let mut mesh = extract_iso_3d(&udf, iso)?;
    for v in &mut mesh.vertices {
        *v = transform.to_original(*v);
    }
    if mesh.faces.is_empty() {
        eprintln!("warning: no surface crosses the offset level");
        return Err(Error::EmptyResult("no surface at this iso level".into()));
    }
    let path = if format == "obj" {
        let p = out.join("mesh.obj");
        write_mesh_obj(&p, &mesh)?;
        p
    } else {
        let p = out.join("mesh.ply");
        write_mesh_ply(&p, &mesh)?;
        p
    };
    println!(
        "extracted {} vertices / {} faces into {}",
        mesh.vertices.len(),
        mesh.faces.len(),
        path.display()
    );
    Ok(())
}

pub fn run(args: &ExtractArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.overrides())?;
    let checkpoint = cfg.require_path("checkpoint")?;
    let net = load_checkpoint(&checkpoint)?;
    let out = match cfg.get("out") {
        Some(dir) => PathBuf::from(dir),
        None => checkpoint
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&out)?;
    cfg.set("checkpoint", checkpoint.display().to_string());
    cfg.set("out", out.display().to_string());

    match net.input_dim {
        2 => extract_2d(&mut cfg, &net, &checkpoint, &out),
        3 => extract_3d(&mut cfg, &net, &checkpoint, &out),
        d => Err(Error::InvalidConfig(format!(
            "checkpoint has input dimension {d}, expected 2 or 3"
        ))),
    }
}
