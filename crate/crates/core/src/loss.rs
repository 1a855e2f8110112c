//! Training losses: boundary terms on the surface batch, off-surface
//! repulsion, and a second-order residual (Monge-Ampere determinant or the
//! squared-gradient identity), with exact parameter gradients.
//!
//! Integrals over the surface and off-surface sets are realized as batch
//! means, so the weights are batch-size independent. The gradient path runs
//! on the batched engine; each point contributes an adjoint seed
//! (d loss / d jet) assembled from the active terms.

use crate::error::{Error, Result};
use crate::field::{
    cofactor_shifted, det_shifted, loss_pass, Jet2, ParamGradient, SirenNet,
};
use crate::geometry::Point;

/// Default scale factor of the squared-distance field.
pub const DEFAULT_K: f64 = 1000.0;
/// Default sharpness of the off-surface repulsion term.
pub const DEFAULT_ALPHA: f64 = 500.0;

/// Non-negative weights of the four loss terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub dirichlet: f64,
    pub neumann: f64,
    pub ma: f64,
    pub nonmanifold: f64,
}

impl LossWeights {
    /// Preset tuned for open surfaces.
    pub fn open_preset() -> Self {
        LossWeights {
            dirichlet: 1e8,
            neumann: 8e6,
            ma: 8.5e-3,
            nonmanifold: 1e6,
        }
    }

    /// Preset tuned for watertight surfaces.
    pub fn watertight_preset() -> Self {
        LossWeights {
            dirichlet: 1e8,
            neumann: 8e6,
            ma: 6e-3,
            nonmanifold: 1e6,
        }
    }

    /// Preset lookup by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "open" => Ok(Self::open_preset()),
            "watertight" => Ok(Self::watertight_preset()),
            other => Err(Error::InvalidConfig(format!(
                "unknown weight preset {other:?}, expected \"open\" or \"watertight\""
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.dirichlet, self.neumann, self.ma, self.nonmanifold];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be non-negative and finite, got {self:?}"
            )));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidConfig(
                "at least one loss weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which second-order residual regularizes the field away from the surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecondOrderTerm {
    /// `|det(H - 2K I)|`; the default.
    MongeAmpere,
    /// `| ||grad||^2 - 4K value |`; ablation variant with a known trivial
    /// zero solution.
    EikonalPrime,
}

/// Everything the loss needs besides the jets themselves.
#[derive(Clone, Copy, Debug)]
pub struct LossConfig {
    pub weights: LossWeights,
    pub k: f64,
    pub alpha: f64,
    pub second_order: SecondOrderTerm,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            weights: LossWeights::open_preset(),
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            second_order: SecondOrderTerm::MongeAmpere,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidConfig(format!("K must be positive, got {}", self.k)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Batch means of each term plus their weighted sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub ma: f64,
    pub dirichlet: f64,
    pub neumann: f64,
    pub nonmanifold: f64,
    pub total: f64,
}

/// Absolute Monge-Ampere residual `|det(H - 2K I)|`.
pub fn ma_residual<const D: usize>(jet: &Jet2<D>, k: f64) -> f64 {
    debug_assert!(k > 0.0);
    det_shifted(&jet.hess, 2.0 * k).abs()
}

/// Zero-level-set defect `|value|`.
pub fn dirichlet_term(value: f64) -> f64 {
    value.abs()
}

/// Critical-point defect `||grad||`.
pub fn neumann_term<const D: usize>(grad: Point<D>) -> f64 {
    grad.norm()
}

/// Off-surface repulsion `exp(-alpha |value|)`; largest when the field
/// claims an off-surface point is on the surface.
pub fn nonmanifold_term(value: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    (-alpha * value.abs()).exp()
}

/// Residual of the squared-gradient identity, `| ||grad||^2 - 4K value |`.
pub fn eikonal_prime_residual<const D: usize>(jet: &Jet2<D>, k: f64) -> f64 {
    debug_assert!(k > 0.0);
    (jet.grad.norm_sq() - 4.0 * k * jet.val).abs()
}

/// Sign with `sgn0(0) = 0`, the subgradient choice at every kink.
fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn second_order_residual<const D: usize>(jet: &Jet2<D>, cfg: &LossConfig) -> f64 {
    match cfg.second_order {
        SecondOrderTerm::MongeAmpere => ma_residual(jet, cfg.k),
        SecondOrderTerm::EikonalPrime => eikonal_prime_residual(jet, cfg.k),
    }
}

/// Raw term sums in slot order (second-order, Dirichlet, Neumann,
/// non-manifold) divided by their domain sizes, finiteness-checked, and
/// combined into the weighted total. Zero-weight terms are skipped in the
/// total exactly, so they contribute nothing even when non-zero.
fn assemble_breakdown(
    sums: [f64; 4],
    n_p: usize,
    n_q: usize,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let n_pq = n_p + n_q;
    let ma = sums[0] / n_pq as f64;
    let dirichlet = sums[1] / n_p as f64;
    let neumann = sums[2] / n_p as f64;
    let nonmanifold = if n_q > 0 { sums[3] / n_q as f64 } else { 0.0 };

    let second_order_name = match cfg.second_order {
        SecondOrderTerm::MongeAmpere => "monge_ampere",
        SecondOrderTerm::EikonalPrime => "eikonal",
    };
    let checks = [
        (ma, second_order_name),
        (dirichlet, "dirichlet"),
        (neumann, "neumann"),
        (nonmanifold, "non_manifold"),
    ];
    for (v, term) in checks {
        if !v.is_finite() {
            return Err(Error::NumericalFailure {
                term,
                detail: format!("term mean is {v}"),
            });
        }
    }

    let w = &cfg.weights;
    let mut total = 0.0;
    for (wi, ti) in [
        (w.ma, ma),
        (w.dirichlet, dirichlet),
        (w.neumann, neumann),
        (w.nonmanifold, nonmanifold),
    ] {
        if wi != 0.0 {
            total += wi * ti;
        }
    }
    if !total.is_finite() {
        return Err(Error::NumericalFailure {
            term: "total",
            detail: format!("weighted total is {total}"),
        });
    }
    Ok(LossBreakdown {
        ma,
        dirichlet,
        neumann,
        nonmanifold,
        total,
    })
}

/// Loss over precomputed jets: boundary terms over the surface set, the
/// repulsion over the off-surface set, the second-order residual over both.
pub fn total_loss<const D: usize>(
    jets_p: &[Jet2<D>],
    jets_q: &[Jet2<D>],
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    if jets_p.is_empty() {
        return Err(Error::DegenerateInput(
            "surface jet set must be non-empty".into(),
        ));
    }
    if jets_q.is_empty() && cfg.weights.nonmanifold > 0.0 {
        return Err(Error::DegenerateInput(
            "off-surface jet set must be non-empty when the non-manifold weight is positive".into(),
        ));
    }
    let mut sums = [0.0; 4];
    for jet in jets_p.iter().chain(jets_q) {
        sums[0] += second_order_residual(jet, cfg);
    }
    for jet in jets_p {
        sums[1] += dirichlet_term(jet.val);
        sums[2] += neumann_term(jet.grad);
    }
    for jet in jets_q {
        sums[3] += nonmanifold_term(jet.val, cfg.alpha);
    }
    assemble_breakdown(sums, jets_p.len(), jets_q.len(), cfg)
}

/// Adjoint seed and term contributions of one point; `is_p` marks surface
/// batch membership. Seeds fold in the batch-mean normalizations.
fn point_seed<const D: usize>(
    jet: &Jet2<D>,
    is_p: bool,
    n_p: usize,
    n_q: usize,
    cfg: &LossConfig,
) -> (Jet2<D>, [f64; 4]) {
    let w = &cfg.weights;
    let n_pq = (n_p + n_q) as f64;
    let mut seed = Jet2::ZERO;
    let mut terms = [0.0; 4];

    match cfg.second_order {
        SecondOrderTerm::MongeAmpere => {
            let det = det_shifted(&jet.hess, 2.0 * cfg.k);
            terms[0] = det.abs();
            if w.ma != 0.0 {
                let scale = w.ma * sgn0(det) / n_pq;
                let cof = cofactor_shifted(&jet.hess, 2.0 * cfg.k);
                for d in 0..D {
                    for e in 0..D {
                        seed.hess[d][e] += scale * cof[d][e];
                    }
                }
            }
        }
        SecondOrderTerm::EikonalPrime => {
            let r = jet.grad.norm_sq() - 4.0 * cfg.k * jet.val;
            terms[0] = r.abs();
            if w.ma != 0.0 {
                let scale = w.ma * sgn0(r) / n_pq;
                seed.grad += jet.grad * (2.0 * scale);
                seed.val += scale * (-4.0 * cfg.k);
            }
        }
    }

    if is_p {
        let n_pf = n_p as f64;
        terms[1] = dirichlet_term(jet.val);
        if w.dirichlet != 0.0 {
            seed.val += w.dirichlet * sgn0(jet.val) / n_pf;
        }
        let gn = neumann_term(jet.grad);
        terms[2] = gn;
        if w.neumann != 0.0 && gn > 0.0 {
            seed.grad += jet.grad * (w.neumann / (n_pf * gn));
        }
    } else {
        let e = nonmanifold_term(jet.val, cfg.alpha);
        terms[3] = e;
        if w.nonmanifold != 0.0 {
            seed.val += w.nonmanifold * (-cfg.alpha) * sgn0(jet.val) * e / n_q as f64;
        }
    }
    (seed, terms)
}

/// Evaluates the loss over fresh forward jets of `surface` and `offsurface`
/// and accumulates its exact parameter gradient in the same pass.
pub fn loss_param_gradient<const D: usize>(
    net: &SirenNet,
    surface: &[Point<D>],
    offsurface: &[Point<D>],
    cfg: &LossConfig,
) -> Result<(LossBreakdown, ParamGradient)> {
    cfg.validate()?;
    if surface.is_empty() {
        return Err(Error::DegenerateInput(
            "surface batch must be non-empty".into(),
        ));
    }
    if offsurface.is_empty() && cfg.weights.nonmanifold > 0.0 {
        return Err(Error::DegenerateInput(
            "off-surface batch must be non-empty when the non-manifold weight is positive".into(),
        ));
    }
    let (n_p, n_q) = (surface.len(), offsurface.len());
    let mut all = Vec::with_capacity(n_p + n_q);
    all.extend_from_slice(surface);
    all.extend_from_slice(offsurface);

    let per_point = |i: usize, jet: &Jet2<D>| point_seed(jet, i < n_p, n_p, n_q, cfg);
    let (sums, grad) = loss_pass(net, &all, &per_point);
    let breakdown = assemble_breakdown(sums, n_p, n_q, cfg)?;
    if !grad.is_finite() {
        return Err(Error::NumericalFailure {
            term: "gradient",
            detail: "non-finite parameter gradient".into(),
        });
    }
    Ok((breakdown, grad))
}
