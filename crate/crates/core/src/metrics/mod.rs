//! Reconstruction quality metrics: Chamfer-L1 (x10^3), normal consistency,
//! and F-score between sampled surfaces, backed by an exact neighbor index.

mod knn;

pub use knn::NnIndex;

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sample_mesh_surface, Point, PointCloud, TriangleMesh};

/// F-score distance threshold in normalized units.
pub const DEFAULT_FSCORE_TAU: f64 = 0.008;
/// Points drawn from each mesh before scoring.
pub const DEFAULT_METRIC_SAMPLES: usize = 100_000;

/// Scores of one reconstruction against ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub cd_l1_x1e3: f64,
    pub nc_percent: f64,
    pub fscore_percent: f64,
    pub threshold: f64,
}

/// One labeled line of the metrics CSV.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub shape: String,
    pub report: MetricReport,
    pub n_samples: usize,
    pub seed: u64,
}

/// Header of the metrics CSV.
pub const REPORT_HEADER: &str = "shape,cd_x1e3,nc,fscore,tau,n_samples,seed";

fn mean_nearest_distance<const D: usize>(from: &[Point<D>], to: &NnIndex<D>) -> f64 {
    let dists: Vec<f64> = from.par_iter().map(|&p| to.nearest(p).1).collect();
    dists.iter().sum::<f64>() / from.len() as f64
}

/// Chamfer-L1 distance, scaled by 10^3: the symmetric average of mean
/// nearest-neighbor distances between the two clouds.
pub fn chamfer_l1<const D: usize>(a: &PointCloud<D>, b: &PointCloud<D>) -> f64 {
    let index_a = NnIndex::build(&a.points).expect("cloud invariants guarantee an index");
    let index_b = NnIndex::build(&b.points).expect("cloud invariants guarantee an index");
    1e3 * 0.5 * (mean_nearest_distance(&a.points, &index_b) + mean_nearest_distance(&b.points, &index_a))
}

fn mean_abs_cosine<const D: usize>(
    from: &PointCloud<D>,
    to: &PointCloud<D>,
    to_index: &NnIndex<D>,
) -> f64 {
    let from_normals = from.normals.as_ref().unwrap();
    let to_normals = to.normals.as_ref().unwrap();
    let cosines: Vec<f64> = from
        .points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let nn = to_index.nearest(p).0;
            from_normals[i].dot(to_normals[nn]).abs().min(1.0)
        })
        .collect();
    cosines.iter().sum::<f64>() / from.len() as f64
}

/// Normal consistency in percent: the symmetric average over both clouds of
/// the mean absolute cosine between each point's normal and the normal at
/// its nearest neighbor in the other cloud. Orientation-free by design.
pub fn normal_consistency<const D: usize>(a: &PointCloud<D>, b: &PointCloud<D>) -> Result<f64> {
    if a.normals.is_none() || b.normals.is_none() {
        return Err(Error::DegenerateInput(
            "normal consistency requires normals on both clouds".into(),
        ));
    }
    let index_a = NnIndex::build(&a.points)?;
    let index_b = NnIndex::build(&b.points)?;
    Ok(100.0 * 0.5 * (mean_abs_cosine(a, b, &index_b) + mean_abs_cosine(b, a, &index_a)))
}

fn fraction_within<const D: usize>(from: &[Point<D>], to: &NnIndex<D>, tau: f64) -> f64 {
    let hits = from
        .par_iter()
        .filter(|&&p| to.nearest(p).1 <= tau)
        .count();
    hits as f64 / from.len() as f64
}

/// F-score in percent at distance threshold `tau`: the harmonic mean of
/// precision (fraction of `a` within `tau` of `b`) and recall (the reverse),
/// or 0 when both vanish.
pub fn f_score<const D: usize>(a: &PointCloud<D>, b: &PointCloud<D>, tau: f64) -> f64 {
    assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
    let index_a = NnIndex::build(&a.points).expect("cloud invariants guarantee an index");
    let index_b = NnIndex::build(&b.points).expect("cloud invariants guarantee an index");
    let precision = fraction_within(&a.points, &index_b, tau);
    let recall = fraction_within(&b.points, &index_a, tau);
    if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

/// Samples both meshes with the same seed and scores the reconstruction
/// against ground truth on all three metrics.
pub fn score_meshes(
    recon: &TriangleMesh,
    truth: &TriangleMesh,
    n_samples: usize,
    tau: f64,
    seed: u64,
) -> Result<MetricReport> {
    let recon_cloud = sample_mesh_surface(recon, n_samples, seed)?;
    let truth_cloud = sample_mesh_surface(truth, n_samples, seed)?;
    Ok(MetricReport {
        cd_l1_x1e3: chamfer_l1(&recon_cloud, &truth_cloud),
        nc_percent: normal_consistency(&recon_cloud, &truth_cloud)?,
        fscore_percent: f_score(&recon_cloud, &truth_cloud, tau),
        threshold: tau,
    })
}

/// Writes the metrics CSV: `shape,cd_x1e3,nc,fscore,tau,n_samples,seed`.
pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{REPORT_HEADER}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            file,
            "{},{},{},{},{},{},{}",
            row.shape, r.cd_l1_x1e3, r.nc_percent, r.fscore_percent, r.threshold, row.n_samples, row.seed
        )?;
    }
    file.flush()?;
    Ok(())
}
