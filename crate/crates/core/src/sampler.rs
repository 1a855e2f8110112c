//! Per-iteration batch draws: surface points with replacement, off-surface
//! points as Gaussian perturbations of the surface batch.
//!
//! Batches are pure functions of `(seed, iter)`: each draw derives its own
//! stream seed, so surface and off-surface sampling stay decoupled and any
//! iteration can be reproduced in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

/// Batch-size, noise scale, and seed of the training sampler.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub batch_size: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            batch_size: 15_000,
            sigma: 0.01,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be non-negative and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

const TAG_SURFACE: u64 = 1;
const TAG_OFFSURFACE: u64 = 2;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream seed for one (seed, iter, purpose) triple.
fn stream_seed(seed: u64, iter: u64, tag: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ iter) ^ tag)
}

/// Draws `batch_size` cloud members uniformly with replacement;
/// deterministic per `(cfg.seed, iter)`.
pub fn sample_surface_batch<const D: usize>(
    cloud: &PointCloud<D>,
    cfg: &SamplerConfig,
    iter: u64,
) -> Vec<Point<D>> {
    let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(cfg.seed, iter, TAG_SURFACE));
    let n = cloud.points.len();
    (0..cfg.batch_size)
        .map(|_| cloud.points[rng.gen_range(0..n)])
        .collect()
}

/// Perturbs each surface-batch point with iid per-coordinate Gaussian noise
/// of standard deviation `cfg.sigma`; no domain clipping. One output per
/// input, deterministic per `(cfg.seed, iter)`.
pub fn sample_offsurface_batch<const D: usize>(
    surface_batch: &[Point<D>],
    cfg: &SamplerConfig,
    iter: u64,
) -> Vec<Point<D>> {
    let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(cfg.seed, iter, TAG_OFFSURFACE));
    let normal = Normal::new(0.0, cfg.sigma).expect("sigma validated non-negative");
    surface_batch
        .iter()
        .map(|&p| {
            let mut q = p;
            for d in 0..D {
                q[d] += normal.sample(&mut rng);
            }
            q
        })
        .collect()
}
