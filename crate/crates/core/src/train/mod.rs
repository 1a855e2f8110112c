//! Training loop: step-decayed Adam over per-iteration surface and
//! off-surface batches, with periodic checkpoints and a loss-history log.

mod adam;

pub use adam::{adam_step, AdamState};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{init_siren, save_checkpoint, SirenNet, DEFAULT_OMEGA0};
use crate::geometry::{normalize_cloud, NormTransform, PointCloud};
use crate::loss::{
    loss_param_gradient, LossBreakdown, LossConfig, LossWeights, SecondOrderTerm, DEFAULT_ALPHA,
    DEFAULT_K,
};
use crate::sampler::{sample_offsurface_batch, sample_surface_batch, SamplerConfig};

/// Everything one training run needs: schedule, loss constants, network
/// shape, sampling, and checkpoint policy.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub iterations: u64,
    pub lr0: f64,
    pub decay_factor: f64,
    /// Iterations at which the learning rate is multiplied by
    /// `decay_factor`; strictly increasing, each below `iterations`.
    pub decay_iters: Vec<u64>,
    pub k: f64,
    pub alpha: f64,
    pub weights: LossWeights,
    pub second_order: SecondOrderTerm,
    pub sampler: SamplerConfig,
    /// Hidden layer widths of the sine-activated net.
    pub hidden: Vec<usize>,
    pub omega0: f64,
    /// Seeds network initialization; batch draws use `sampler.seed`.
    pub seed: u64,
    /// Kept for interface parity: evaluation order is fixed regardless, so
    /// equal configs reproduce bit-identical runs either way.
    pub deterministic: bool,
    /// Where checkpoints and the loss CSV go; `None` disables both.
    pub checkpoint_dir: Option<PathBuf>,
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10_000,
            lr0: 3e-4,
            decay_factor: 0.18,
            decay_iters: vec![4500, 6000, 7000, 8000, 9000],
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            weights: LossWeights::open_preset(),
            second_order: SecondOrderTerm::MongeAmpere,
            sampler: SamplerConfig::default(),
            hidden: vec![256; 5],
            omega0: DEFAULT_OMEGA0,
            seed: 0,
            deterministic: true,
            checkpoint_dir: None,
            checkpoint_every: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lr0 must be positive, got {}",
                self.lr0
            )));
        }
        if !(self.decay_factor.is_finite() && self.decay_factor > 0.0 && self.decay_factor <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "decay_factor must lie in (0, 1], got {}",
                self.decay_factor
            )));
        }
        if self.decay_iters.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "decay_iters must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = self.decay_iters.last() {
            if last >= self.iterations {
                return Err(Error::InvalidConfig(format!(
                    "decay iteration {last} is not below iterations {}",
                    self.iterations
                )));
            }
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig(
                "hidden widths must be non-empty and positive".into(),
            ));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig(
                "checkpoint_every must be at least 1".into(),
            ));
        }
        self.sampler.validate()?;
        self.loss_config().validate()
    }

    /// The loss-side slice of this config.
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            weights: self.weights,
            k: self.k,
            alpha: self.alpha,
            second_order: self.second_order,
        }
    }
}

/// Learning rate at `iter`: `lr0 * decay_factor^(number of decay points <= iter)`.
pub fn lr_at(cfg: &TrainConfig, iter: u64) -> f64 {
    let decays = cfg.decay_iters.iter().filter(|&&d| d <= iter).count();
    cfg.lr0 * cfg.decay_factor.powi(decays as i32)
}

/// One completed iteration: schedule position, loss terms, wall time.
#[derive(Clone, Copy, Debug)]
pub struct IterRecord {
    pub iter: u64,
    pub lr: f64,
    pub loss: LossBreakdown,
    pub wall_ms: f64,
}

/// Per-iteration records in execution order; length equals the number of
/// iterations that completed.
#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub records: Vec<IterRecord>,
}

// Wall time stays out of the file so a rerun reproduces it bit-exactly.
const HISTORY_HEADER: &str = "iter,lr,ma,dirichlet,neumann,nonmanifold,total";

fn write_record(w: &mut impl Write, r: &IterRecord) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        r.iter,
        r.lr,
        r.loss.ma,
        r.loss.dirichlet,
        r.loss.neumann,
        r.loss.nonmanifold,
        r.loss.total
    )
}

impl TrainHistory {
    /// Writes the history as `iter,lr,ma,dirichlet,neumann,nonmanifold,total`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{HISTORY_HEADER}")?;
        for r in &self.records {
            write_record(&mut w, r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A finished run: the trained net, its history, and the similarity
/// transform from normalized coordinates back to the input cloud's frame.
#[derive(Clone, Debug)]
pub struct TrainResult<const D: usize> {
    pub net: SirenNet,
    pub history: TrainHistory,
    pub transform: NormTransform<D>,
}

/// Runs the full loop: normalize, init, then per iteration sample batches,
/// evaluate the loss gradient, and step Adam. Checkpoints land in
/// `checkpoint_dir` every `checkpoint_every` iterations plus a `final.ckpt`;
/// the loss CSV grows a row per iteration, so an abort keeps both the rows
/// and the checkpoints already written.
pub fn train<const D: usize>(cloud: &PointCloud<D>, cfg: &TrainConfig) -> Result<TrainResult<D>> {
    cfg.validate()?;
    let (normalized, transform) = normalize_cloud(cloud)?;
    let mut net = init_siren(D, &cfg.hidden, cfg.omega0, cfg.seed)?;
    let mut state = AdamState::new(&net);
    let loss_cfg = cfg.loss_config();

    let mut csv = match &cfg.checkpoint_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(File::create(dir.join("history.csv"))?);
            writeln!(w, "{HISTORY_HEADER}")?;
            Some(w)
        }
        None => None,
    };

    let mut history = TrainHistory {
        records: Vec::with_capacity(cfg.iterations as usize),
    };
    for iter in 0..cfg.iterations {
        let started = Instant::now();
        let lr = lr_at(cfg, iter);
        let surface = sample_surface_batch(&normalized, &cfg.sampler, iter);
        let offsurface = sample_offsurface_batch(&surface, &cfg.sampler, iter);
        let (loss, grad) = loss_param_gradient(&net, &surface, &offsurface, &loss_cfg)?;
        adam_step(&mut net, &grad, &mut state, lr)?;
        let record = IterRecord {
            iter,
            lr,
            loss,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        if let Some(w) = csv.as_mut() {
            write_record(w, &record)?;
            w.flush()?;
        }
        history.records.push(record);
        if let Some(dir) = &cfg.checkpoint_dir {
            if (iter + 1) % cfg.checkpoint_every == 0 {
                save_checkpoint(&net, &dir.join(format!("iter_{:06}.ckpt", iter + 1)))?;
            }
        }
    }
    if let Some(dir) = &cfg.checkpoint_dir {
        save_checkpoint(&net, &dir.join("final.ckpt"))?;
    }
    Ok(TrainResult {
        net,
        history,
        transform,
    })
}
