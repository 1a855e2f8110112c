//! `eval`: score a reconstruction against ground truth.

use std::path::{Path, PathBuf};

use clap::Args;
use s2df_core::error::{Error, Result};
use s2df_core::geometry::io::{read_cloud, read_mesh_obj};
use s2df_core::geometry::{sample_mesh_surface, PointCloud};
use s2df_core::metrics::{
    chamfer_l1, f_score, normal_consistency, write_report_csv, MetricReport, ReportRow,
    DEFAULT_FSCORE_TAU, DEFAULT_METRIC_SAMPLES,
};

use crate::commands::train::{push, push_path};
use crate::config::RunConfig;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Reconstructed surface: a mesh (`.obj`) or a point file.
    #[arg(long)]
    pub recon: Option<PathBuf>,
    /// Ground truth: a mesh (`.obj`) or a point file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Ambient dimension (2 or 3; meshes imply 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output directory for `metrics.csv` and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file or manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// F-score distance threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Points sampled from each mesh input.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Row label in the metrics CSV (defaults to the recon file stem).
    #[arg(long)]
    pub shape: Option<String>,
}

impl EvalArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut over = Vec::new();
        push_path(&mut over, "recon", &self.recon);
        push_path(&mut over, "truth", &self.truth);
        push(&mut over, "dim", &self.dim);
        push_path(&mut over, "out", &self.out);
        push(&mut over, "tau", &self.tau);
        push(&mut over, "n_samples", &self.n_samples);
        push(&mut over, "seed", &self.seed);
        push(&mut over, "shape", &self.shape);
        over
    }
}

/// A mesh path is sampled to a cloud; anything else is read as points.
fn load_side_3d(path: &Path, n_samples: usize, seed: u64) -> Result<PointCloud<3>> {
    if path.extension().is_some_and(|e| e == "obj") {
        let mesh = read_mesh_obj(path)?;
        sample_mesh_surface(&mesh, n_samples, seed)
    } else {
        read_cloud::<3>(path)
    }
}

fn score<const D: usize>(
    recon: &PointCloud<D>,
    truth: &PointCloud<D>,
    tau: f64,
) -> Result<MetricReport> {
    let nc_percent = if recon.normals.is_some() && truth.normals.is_some() {
        normal_consistency(recon, truth)?
    } else {
        eprintln!("warning: normals missing on one side, normal consistency unavailable");
        f64::NAN
    };
    Ok(MetricReport {
        cd_l1_x1e3: chamfer_l1(recon, truth),
        nc_percent,
        fscore_percent: f_score(recon, truth, tau),
        threshold: tau,
    })
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.overrides())?;
    let recon_path = cfg.require_path("recon")?;
    let truth_path = cfg.require_path("truth")?;
    let out = PathBuf::from(cfg.get_string("out", "."));
    std::fs::create_dir_all(&out)?;
    let tau = cfg.get_f64("tau", DEFAULT_FSCORE_TAU)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let n_samples = cfg.get_usize("n_samples", DEFAULT_METRIC_SAMPLES)?;
    let seed = cfg.get_u64("seed", 0)?;
    let shape = cfg.get_string(
        "shape",
        recon_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("shape"),
    );
    let dim: usize = match cfg.get("dim") {
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("dim has unreadable value `{raw}`")))?,
        None => 3,
    };

    cfg.set("recon", recon_path.display().to_string());
    cfg.set("truth", truth_path.display().to_string());
    cfg.set("out", out.display().to_string());
    cfg.set("tau", tau.to_string());
    cfg.set("n_samples", n_samples.to_string());
    cfg.set("seed", seed.to_string());
    cfg.set("shape", shape.clone());
    cfg.set("dim", dim.to_string());
    cfg.write_manifest(&out.join("run.json"), "eval")?;

    let report = match dim {
        2 => {
            let recon = read_cloud::<2>(&recon_path)?;
            let truth = read_cloud::<2>(&truth_path)?;
            score(&recon, &truth, tau)?
        }
        3 => {
            let recon = load_side_3d(&recon_path, n_samples, seed)?;
            let truth = load_side_3d(&truth_path, n_samples, seed)?;
            score(&recon, &truth, tau)?
        }
        d => {
            return Err(Error::InvalidConfig(format!(
                "dim must be 2 or 3, got {d}"
            )))
        }
    };

    let csv_path = out.join("metrics.csv");
    write_report_csv(
        &csv_path,
        &[ReportRow {
            shape: shape.clone(),
            report,
            n_samples,
            seed,
        }],
    )?;
    println!(
        "{shape}: cd(x1e3) {:.6} nc {:.3} f@{} {:.3} -> {}",
        report.cd_l1_x1e3,
        report.nc_percent,
        tau,
        report.fscore_percent,
        csv_path.display()
    );
    Ok(())
}
