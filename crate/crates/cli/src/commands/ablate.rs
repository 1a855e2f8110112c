//! `ablate`: scripted K-sweep and loss-combination matrix over one shape.

use std::path::{Path, PathBuf};

use clap::Args;
use s2df_core::error::{Error, Result};
use s2df_core::extract::{
    evaluate_grid, extract_iso_2d, extract_iso_3d, s2df_to_udf, DEFAULT_ISO,
};
use s2df_core::geometry::io::read_cloud;
use s2df_core::geometry::{sample_mesh_surface, AxisGrid, Point, PointCloud};
use s2df_core::loss::SecondOrderTerm;
use s2df_core::metrics::chamfer_l1;
use s2df_core::train::{train, TrainConfig};

use crate::commands::extract::GRID_HALF;
use crate::commands::train::{push, push_path, write_transform};
use crate::config::RunConfig;

/// Header of the ablation summary table.
pub const ABLATE_HEADER: &str = "variant,k,loss,cd_x1e3,components,status";

const DEFAULT_K_SWEEP: [f64; 5] = [1.0, 100.0, 500.0, 1000.0, 2000.0];

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Input point cloud.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ambient dimension of the cloud (2 or 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output directory; one subdirectory per variant plus `ablate.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file or manifest with shared training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Which matrix to run: `k-sweep`, `loss-combos`, or `both`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated K values for the sweep.
    #[arg(long)]
    pub k_values: Option<String>,
    /// Training iterations per variant.
    #[arg(long)]
    pub iters: Option<u64>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Points per surface batch.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Base seed shared by every variant.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extraction grid resolution.
    #[arg(long)]
    pub res: Option<usize>,
    /// Extraction offset level.
    #[arg(long)]
    pub iso: Option<f64>,
}

impl AblateArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut over = Vec::new();
        push_path(&mut over, "input", &self.input);
        push(&mut over, "dim", &self.dim);
        push_path(&mut over, "out", &self.out);
        push(&mut over, "mode", &self.mode);
        push(&mut over, "k_values", &self.k_values);
        push(&mut over, "iterations", &self.iters);
        push(&mut over, "hidden", &self.hidden);
        push(&mut over, "batch", &self.batch);
        push(&mut over, "seed", &self.seed);
        push(&mut over, "res", &self.res);
        push(&mut over, "iso", &self.iso);
        over
    }
}

struct Variant {
    label: String,
    loss_desc: &'static str,
    cfg: TrainConfig,
}

struct Row {
    variant: String,
    k: f64,
    loss: &'static str,
    cd_x1e3: Option<f64>,
    components: usize,
    status: &'static str,
}

impl Row {
    fn csv_line(&self) -> String {
        let cd = match self.cd_x1e3 {
            Some(v) => format!("{v:.6}"),
            None => "nan".to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.variant, self.k, self.loss, cd, self.components, self.status
        )
    }
}

/// Copies the base configuration with individual loss terms switched off.
fn masked(base: &TrainConfig, d: bool, n: bool, ma: bool, non: bool) -> TrainConfig {
    let mut cfg = base.clone();
    if !d {
        cfg.weights.dirichlet = 0.0;
    }
    if !n {
        cfg.weights.neumann = 0.0;
    }
    if !ma {
        cfg.weights.ma = 0.0;
    }
    if !non {
        cfg.weights.nonmanifold = 0.0;
    }
    cfg
}

fn k_label(k: f64) -> String {
    if k.fract() == 0.0 && k.abs() < 1e15 {
        format!("k{}", k as i64)
    } else {
        format!("k{k}")
    }
}

fn variants(base: &TrainConfig, mode: &str, k_values: &[f64]) -> Result<Vec<Variant>> {
    let mut list = Vec::new();
    if mode == "k-sweep" || mode == "both" {
        for &k in k_values {
            let mut cfg = base.clone();
            cfg.k = k;
            list.push(Variant {
                label: k_label(k),
                loss_desc: "d+n+ma+non",
                cfg,
            });
        }
    }
    if mode == "loss-combos" || mode == "both" {
        let combos: [(&str, &'static str, TrainConfig); 8] = [
            ("dir", "d", masked(base, true, false, false, false)),
            ("neu", "n", masked(base, false, true, false, false)),
            ("dir-neu", "d+n", masked(base, true, true, false, false)),
            ("dir-ma", "d+ma", masked(base, true, false, true, false)),
            ("neu-ma", "n+ma", masked(base, false, true, true, false)),
            ("dir-neu-ma", "d+n+ma", masked(base, true, true, true, false)),
            ("full", "d+n+ma+non", base.clone()),
            ("eikonal-prime", "d+n+eik+non", {
                let mut cfg = base.clone();
                cfg.second_order = SecondOrderTerm::EikonalPrime;
                cfg
            }),
        ];
        for (label, desc, cfg) in combos {
            list.push(Variant {
                label: label.to_string(),
                loss_desc: desc,
                cfg,
            });
        }
    }
    if list.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "unknown ablation mode `{mode}` (expected k-sweep, loss-combos, or both)"
        )));
    }
    Ok(list)
}

/// Trains one variant and measures the extracted geometry against the
/// input cloud in its original coordinates.
fn run_variant_2d(
    cloud: &PointCloud<2>,
    variant: &Variant,
    dir: &Path,
    res: usize,
    iso: f64,
) -> Row {
    let mut row = Row {
        variant: variant.label.clone(),
        k: variant.cfg.k,
        loss: variant.loss_desc,
        cd_x1e3: None,
        components: 0,
        status: "failed",
    };
    let result = match train(cloud, &variant.cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("[ablate] {}: training failed: {e}", variant.label);
            return row;
        }
    };
    if let Err(e) = write_transform(&dir.join("transform.json"), &result.transform) {
        eprintln!("[ablate] {}: sidecar write failed: {e}", variant.label);
        return row;
    }
    let contours = (|| {
        let grid = AxisGrid::<2>::cube(GRID_HALF, res)?;
        let field = evaluate_grid(&result.net, &grid)?;
        let udf = s2df_to_udf(&field, variant.cfg.k)?;
        extract_iso_2d(&udf, iso)
    })();
    let contours = match contours {
        Ok(c) => c,
        Err(e) => {
            eprintln!("[ablate] {}: extraction failed: {e}", variant.label);
            return row;
        }
    };
    let points: Vec<Point<2>> = contours
        .iter()
        .flat_map(|c| c.vertices.iter())
        .map(|&v| result.transform.to_original(v))
        .collect();
    row.components = contours.len();
    if points.is_empty() {
        row.status = "empty";
        return row;
    }
    match PointCloud::new(points, None) {
        Ok(recon) => {
            row.cd_x1e3 = Some(chamfer_l1(&recon, cloud));
            row.status = "ok";
        }
        Err(e) => eprintln!("[ablate] {}: contour cloud invalid: {e}", variant.label),
    }
    row
}

fn run_variant_3d(
    cloud: &PointCloud<3>,
    variant: &Variant,
    dir: &Path,
    res: usize,
    iso: f64,
) -> Row {
    let mut row = Row {
        variant: variant.label.clone(),
        k: variant.cfg.k,
        loss: variant.loss_desc,
        cd_x1e3: None,
        components: 0,
        status: "failed",
    };
    let result = match train(cloud, &variant.cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("[ablate] {}: training failed: {e}", variant.label);
            return row;
        }
    };
    if let Err(e) = write_transform(&dir.join("transform.json"), &result.transform) {
        eprintln!("[ablate] {}: sidecar write failed: {e}", variant.label);
        return row;
    }
    let mesh = (|| {
        let grid = AxisGrid::<3>::cube(GRID_HALF, res)?;
        let field = evaluate_grid(&result.net, &grid)?;
        let udf = s2df_to_udf(&field, variant.cfg.k)?;
        extract_iso_3d(&udf, iso)
    })();
    let mesh = match mesh {
        Ok(m) => m,
        Err(e) => {
            eprintln!("[ablate] {}: extraction failed: {e}", variant.label);
            return row;
        }
    };
    if mesh.faces.is_empty() {
        row.status = "empty";
        return row;
    }
    row.components = mesh.components().len();
    let scored = (|| {
        let samples = sample_mesh_surface(&mesh, 20_000, 0)?;
        let points: Vec<Point<3>> = samples
            .points
            .iter()
            .map(|&v| result.transform.to_original(v))
            .collect();
        PointCloud::new(points, None)
    })();
    match scored {
        Ok(recon) => {
            row.cd_x1e3 = Some(chamfer_l1(&recon, cloud));
            row.status = "ok";
        }
        Err(e) => eprintln!("[ablate] {}: surface sampling failed: {e}", variant.label),
    }
    row
}

fn run_matrix<const D: usize>(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    mode: &str,
    k_values: &[f64],
    runner: fn(&PointCloud<D>, &Variant, &Path, usize, f64) -> Row,
) -> Result<Vec<Row>> {
    let cloud = read_cloud::<D>(input)?;
    let base = cfg.train_config(out)?;
    let res = cfg.get_usize("res", if D == 2 { 256 } else { 96 })?;
    let iso = cfg.get_f64("iso", DEFAULT_ISO)?;
    let list = variants(&base, mode, k_values)?;
    let mut rows = Vec::with_capacity(list.len());
    for mut variant in list {
        let dir = out.join(&variant.label);
        std::fs::create_dir_all(&dir)?;
        variant.cfg.checkpoint_dir = Some(dir.clone());
        eprintln!(
            "[ablate] {}: {} iterations, K={}",
            variant.label, variant.cfg.iterations, variant.cfg.k
        );
        let row = runner(&cloud, &variant, &dir, res, iso);
        eprintln!("[ablate] {}: {}", variant.label, row.csv_line());
        rows.push(row);
    }
    Ok(rows)
}

pub fn run(args: &AblateArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.overrides())?;
    let input = cfg.require_path("input")?;
    let dim = cfg.get_usize("dim", 2)?;
    let out = PathBuf::from(cfg.get_string("out", "s2df_ablate"));
    let mode = cfg.get_string("mode", "both");
    let k_values = cfg.get_list("k_values", &DEFAULT_K_SWEEP)?;
    std::fs::create_dir_all(&out)?;

    let base = cfg.train_config(&out)?;
    cfg.record_train_config(&base);
    cfg.set("input", input.display().to_string());
    cfg.set("dim", dim.to_string());
    cfg.set("out", out.display().to_string());
    cfg.set("mode", mode.clone());
    cfg.set(
        "k_values",
        k_values
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    cfg.write_manifest(&out.join("run.json"), "ablate")?;

    let rows = match dim {
        2 => run_matrix::<2>(&cfg, &input, &out, &mode, &k_values, run_variant_2d)?,
        3 => run_matrix::<3>(&cfg, &input, &out, &mode, &k_values, run_variant_3d)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "dim must be 2 or 3, got {other}"
            )))
        }
    };

    let mut csv = String::from(ABLATE_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    let table = out.join("ablate.csv");
    std::fs::write(&table, &csv)?;
    println!("{ABLATE_HEADER}");
    for row in &rows {
        println!("{}", row.csv_line());
    }
    println!("wrote {}", table.display());
    Ok(())
}
