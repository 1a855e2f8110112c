//! `train`: fit the field to a point cloud and write run artifacts.

use std::path::{Path, PathBuf};

use clap::Args;
use s2df_core::error::{Error, Result};
use s2df_core::geometry::{io::read_cloud, NormTransform};
use s2df_core::train::{train, TrainResult};

use crate::config::RunConfig;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Input point cloud (xyz/txt/ply).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ambient dimension of the cloud (2 or 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output directory for checkpoints, history, and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file (`key = value`) or a `run.json` manifest to start from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training iterations.
    #[arg(long)]
    pub iters: Option<u64>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr0: Option<f64>,
    /// Multiplicative decay applied at each decay iteration.
    #[arg(long)]
    pub decay_factor: Option<f64>,
    /// Comma-separated decay iterations (empty for none).
    #[arg(long)]
    pub decay_iters: Option<String>,
    /// Distance-scaling constant of the field.
    #[arg(long)]
    pub k: Option<f64>,
    /// Off-surface repulsion sharpness.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Loss weight preset: `open` or `watertight`.
    #[arg(long)]
    pub weights: Option<String>,
    /// Second-order loss variant: `ma` or `eikonal-prime`.
    #[arg(long)]
    pub loss: Option<String>,
    /// Points per surface batch (off-surface batch matches).
    #[arg(long)]
    pub batch: Option<usize>,
    /// Std-dev of the off-surface Gaussian perturbation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    pub hidden: Option<String>,
    /// First-layer frequency of the sine network.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Seed for initialization and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed evaluation order for bit-reproducible runs.
    #[arg(long)]
    pub deterministic: Option<bool>,
    /// Checkpoint cadence in iterations.
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut over: Vec<(&'static str, String)> = Vec::new();
        push_path(&mut over, "input", &self.input);
        push(&mut over, "dim", &self.dim);
        push_path(&mut over, "out", &self.out);
        push(&mut over, "iterations", &self.iters);
        push(&mut over, "lr0", &self.lr0);
        push(&mut over, "decay_factor", &self.decay_factor);
        push(&mut over, "decay_iters", &self.decay_iters);
        push(&mut over, "k", &self.k);
        push(&mut over, "alpha", &self.alpha);
        push(&mut over, "weights", &self.weights);
        push(&mut over, "loss", &self.loss);
        push(&mut over, "batch", &self.batch);
        push(&mut over, "sigma", &self.sigma);
        push(&mut over, "hidden", &self.hidden);
        push(&mut over, "omega0", &self.omega0);
        push(&mut over, "seed", &self.seed);
        push(&mut over, "deterministic", &self.deterministic);
        push(&mut over, "checkpoint_every", &self.checkpoint_every);
        over
    }
}

pub(crate) fn push<T: ToString>(
    over: &mut Vec<(&'static str, String)>,
    key: &'static str,
    value: &Option<T>,
) {
    if let Some(v) = value {
        over.push((key, v.to_string()));
    }
}

pub(crate) fn push_path(
    over: &mut Vec<(&'static str, String)>,
    key: &'static str,
    value: &Option<PathBuf>,
) {
    if let Some(p) = value {
        over.push((key, p.display().to_string()));
    }
}

/// Writes the normalization transform sidecar next to the checkpoints.
pub(crate) fn write_transform<const D: usize>(
    path: &Path,
    transform: &NormTransform<D>,
) -> Result<()> {
    let center: Vec<String> = (0..D).map(|d| transform.center[d].to_string()).collect();
    let json = serde_json::json!({
        "center": center,
        "scale": transform.scale.to_string(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&json).unwrap() + "\n")?;
    Ok(())
}

/// Reads the transform sidecar written by `write_transform`.
pub(crate) fn read_transform<const D: usize>(path: &Path) -> Result<NormTransform<D>> {
    let parse_err = |detail: String| Error::Parse {
        path: path.display().to_string(),
        detail,
    };
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    let center_raw = value
        .get("center")
        .and_then(|c| c.as_array())
        .ok_or_else(|| parse_err("missing `center` array".into()))?;
    if center_raw.len() != D {
        return Err(parse_err(format!(
            "transform is {}-dimensional, expected {D}",
            center_raw.len()
        )));
    }
    let mut center = s2df_core::Point::ZERO;
    for (d, v) in center_raw.iter().enumerate() {
        let s = v.as_str().ok_or_else(|| parse_err("center entry is not a string".into()))?;
        center[d] = s
            .parse()
            .map_err(|_| parse_err(format!("unreadable center entry `{s}`")))?;
    }
    let scale_raw = value
        .get("scale")
        .and_then(|s| s.as_str())
        .ok_or_else(|| parse_err("missing `scale`".into()))?;
    let scale = scale_raw
        .parse()
        .map_err(|_| parse_err(format!("unreadable scale `{scale_raw}`")))?;
    Ok(NormTransform { center, scale })
}

fn train_dim<const D: usize>(cfg: &mut RunConfig, input: &Path, out: &Path) -> Result<()> {
    let cloud = read_cloud::<D>(input)?;
    let train_cfg = cfg.train_config(out)?;
    cfg.record_train_config(&train_cfg);
    cfg.write_manifest(&out.join("run.json"), "train")?;

    let TrainResult {
        history, transform, ..
    } = train(&cloud, &train_cfg)?;
    write_transform(&out.join("transform.json"), &transform)?;

    let last = history.records.last();
    let final_loss = last.map(|r| r.loss.total).unwrap_or(f64::NAN);
    println!(
        "trained {} iterations on {} points ({}D); final total loss {final_loss:.6e}",
        train_cfg.iterations,
        cloud.len(),
        D
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.overrides())?;
    let input = cfg.require_path("input")?;
    let out = PathBuf::from(cfg.get_string("out", "s2df_run"));
    std::fs::create_dir_all(&out)?;
    cfg.set("input", input.display().to_string());
    cfg.set("out", out.display().to_string());

    match cfg.require("dim")?.parse() {
        Ok(2usize) => train_dim::<2>(&mut cfg, &input, &out),
        Ok(3) => train_dim::<3>(&mut cfg, &input, &out),
        _ => Err(Error::InvalidConfig(
            "dim must be 2 or 3".into(),
        )),
    }
}
