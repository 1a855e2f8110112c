//! Sine-activated MLP with exact second-order jet propagation.
//!
//! The network is a stack of affine layers; every layer but the last feeds
//! its pre-activation through `sin(omega0 * a)`. Forward evaluation carries
//! the full second-order jet (value, gradient, Hessian) through each layer
//! in closed form, so no autodiff tape or finite differencing is involved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::field::jet::Jet2;
use crate::geometry::Point;

/// Default angular frequency of the sine activations.
pub const DEFAULT_OMEGA0: f64 = 30.0;

/// One affine layer: row-major `rows x cols` weights plus a bias per row.
#[derive(Clone, Debug)]
pub struct LayerParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl LayerParams {
    fn zeros(rows: usize, cols: usize) -> Self {
        LayerParams {
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
            rows,
            cols,
        }
    }

    /// Weight row `r` as a slice of length `cols`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.w[r * self.cols..(r + 1) * self.cols]
    }
}

/// Parameters of a sine-activated MLP mapping `input_dim` reals to one.
#[derive(Clone, Debug)]
pub struct SirenNet {
    pub layers: Vec<LayerParams>,
    pub omega0: f64,
    pub input_dim: usize,
}

/// Gradient (or any tensor congruent with the parameters): one weight and one
/// bias block per layer, in layer order.
#[derive(Clone, Debug)]
pub struct ParamGradient {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl ParamGradient {
    /// Zero tensor with the same shapes as `net`'s parameters.
    pub fn zeros_like(net: &SirenNet) -> Self {
        ParamGradient {
            w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    /// Elementwise accumulation of a congruent tensor.
    pub fn add_assign(&mut self, other: &ParamGradient) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().flatten().all(|v| v.is_finite())
            && self.b.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest absolute entry; 0 for an all-zero tensor.
    pub fn max_abs(&self) -> f64 {
        let w = self.w.iter().flatten();
        let b = self.b.iter().flatten();
        w.chain(b).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dot product with a fixed 8-lane accumulation order.
///
/// Every scalar value path in the crate (jet propagation, grid evaluation)
/// funnels through this one routine, so their results agree bit for bit.
#[inline]
pub(crate) fn dot_lanes(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for ch in 0..chunks {
        let i = ch * 8;
        for l in 0..8 {
            acc[l] = a[i + l].mul_add(b[i + l], acc[l]);
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail = a[i].mul_add(b[i], tail);
    }
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7])) + tail
}

/// Initialize a network: first layer `U(-1/input_dim, 1/input_dim)`, later
/// layers `U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0)`, biases zero.
pub fn init_siren(input_dim: usize, hidden: &[usize], omega0: f64, seed: u64) -> Result<SirenNet> {
    if input_dim == 0 {
        return Err(Error::InvalidConfig("input_dim must be at least 1".into()));
    }
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::InvalidConfig(
            "hidden widths must be non-empty and positive".into(),
        ));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "omega0 must be positive and finite, got {omega0}"
        )));
    }
    let mut widths = Vec::with_capacity(hidden.len() + 2);
    widths.push(input_dim);
    widths.extend_from_slice(hidden);
    widths.push(1);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for l in 0..widths.len() - 1 {
        let (cols, rows) = (widths[l], widths[l + 1]);
        let lim = if l == 0 {
            1.0 / input_dim as f64
        } else {
            (6.0 / cols as f64).sqrt() / omega0
        };
        let mut layer = LayerParams::zeros(rows, cols);
        for wv in layer.w.iter_mut() {
            *wv = rng.gen_range(-lim..lim);
        }
        layers.push(layer);
    }
    Ok(SirenNet {
        layers,
        omega0,
        input_dim,
    })
}

impl SirenNet {
    /// Layer widths from input to output, e.g. `[3, 256, ..., 1]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(self.layers.iter().map(|l| l.rows));
        w
    }

    /// Total number of scalar parameters (weights plus biases).
    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Widest layer dimension, input and output included.
    pub fn max_width(&self) -> usize {
        self.widths().into_iter().max().unwrap_or(1)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }

    /// Scalar field value at `x`; bit-identical to `forward_jet(x).val`.
    pub fn forward_value<const D: usize>(&self, x: Point<D>) -> f64 {
        assert_eq!(self.input_dim, D, "network input dim mismatch");
        let n = self.layers.len();
        let mut z: Vec<f64> = x.0.to_vec();
        let mut next: Vec<f64> = Vec::with_capacity(self.max_width());
        for (l, layer) in self.layers.iter().enumerate() {
            next.clear();
            for r in 0..layer.rows {
                let a = dot_lanes(layer.row(r), &z) + layer.b[r];
                next.push(if l + 1 == n { a } else { (self.omega0 * a).sin() });
            }
            std::mem::swap(&mut z, &mut next);
        }
        z[0]
    }

    /// Value, gradient, and Hessian at `x`, propagated exactly through every
    /// layer. The returned Hessian is symmetric to the last bit.
    pub fn forward_jet<const D: usize>(&self, x: Point<D>) -> Jet2<D> {
        assert_eq!(self.input_dim, D, "network input dim mismatch");
        let n = self.layers.len();
        let w0 = self.omega0;

        let mut z: Vec<f64> = x.0.to_vec();
        let mut g: Vec<Point<D>> = (0..D)
            .map(|i| {
                let mut e = Point::ZERO;
                e[i] = 1.0;
                e
            })
            .collect();
        let mut h: Vec<[[f64; D]; D]> = vec![[[0.0; D]; D]; D];

        for (l, layer) in self.layers.iter().enumerate() {
            let last = l + 1 == n;
            let mut z2 = Vec::with_capacity(layer.rows);
            let mut g2 = Vec::with_capacity(layer.rows);
            let mut h2 = Vec::with_capacity(layer.rows);
            for r in 0..layer.rows {
                let row = layer.row(r);
                let a = dot_lanes(row, &z) + layer.b[r];
                let mut ga = Point::ZERO;
                let mut ha = [[0.0; D]; D];
                for (i, wi) in row.iter().enumerate() {
                    for d in 0..D {
                        ga[d] += wi * g[i][d];
                    }
                    for d in 0..D {
                        for e in d..D {
                            ha[d][e] += wi * h[i][d][e];
                        }
                    }
                }
                if last {
                    for d in 0..D {
                        for e in d + 1..D {
                            ha[e][d] = ha[d][e];
                        }
                    }
                    z2.push(a);
                    g2.push(ga);
                    h2.push(ha);
                } else {
                    let s = (w0 * a).sin();
                    // black_box stops LLVM from fusing this cos with the sin
                    // above into glibc sincos, whose rounding can differ from
                    // the standalone sin by 1 ulp; the value channel must stay
                    // bit-identical to forward_value.
                    let c = std::hint::black_box(w0 * a).cos();
                    let w0c = w0 * c;
                    let w0s = w0 * w0 * s;
                    let mut hu = [[0.0; D]; D];
                    for d in 0..D {
                        for e in d..D {
                            hu[d][e] = w0c * ha[d][e] - w0s * ga[d] * ga[e];
                            hu[e][d] = hu[d][e];
                        }
                    }
                    z2.push(s);
                    g2.push(ga * w0c);
                    h2.push(hu);
                }
            }
            z = z2;
            g = g2;
            h = h2;
        }
        Jet2 {
            val: z[0],
            grad: g[0],
            hess: h[0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_difference_jet;
    use approx::assert_relative_eq;

    #[test]
    fn init_rejects_bad_configs() {
        assert!(init_siren(0, &[8], 30.0, 1).is_err());
        assert!(init_siren(2, &[], 30.0, 1).is_err());
        assert!(init_siren(2, &[8, 0], 30.0, 1).is_err());
        assert!(init_siren(2, &[8], 0.0, 1).is_err());
        assert!(init_siren(2, &[8], f64::NAN, 1).is_err());
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let net = init_siren(3, &[16, 16], 30.0, 7).unwrap();
        assert_eq!(net.widths(), vec![3, 16, 16, 1]);
        let lim0 = 1.0 / 3.0;
        for &v in &net.layers[0].w {
            assert!(v.abs() < lim0);
        }
        for (l, layer) in net.layers.iter().enumerate().skip(1) {
            let lim = (6.0 / layer.cols as f64).sqrt() / 30.0;
            for &v in &layer.w {
                assert!(v.abs() < lim, "layer {l} weight {v} exceeds bound {lim}");
            }
        }
        for layer in &net.layers {
            assert!(layer.b.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_siren(2, &[32, 32], 30.0, 42).unwrap();
        let b = init_siren(2, &[32, 32], 30.0, 42).unwrap();
        let c = init_siren(2, &[32, 32], 30.0, 43).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.w, lb.w);
        }
        assert!(a.layers.iter().zip(&c.layers).any(|(la, lc)| la.w != lc.w));
    }

    #[test]
    fn zero_weight_net_returns_final_bias_with_zero_derivatives() {
        let mut net = init_siren(3, &[8], 30.0, 0).unwrap();
        for layer in net.layers.iter_mut() {
            layer.w.iter_mut().for_each(|v| *v = 0.0);
        }
        net.layers.last_mut().unwrap().b[0] = 0.75;
        let jet = net.forward_jet(Point([0.3, -0.2, 0.9]));
        assert_eq!(jet.val, 0.75);
        assert_eq!(jet.grad, Point::ZERO);
        assert_eq!(jet.hess, [[0.0; 3]; 3]);
    }

    #[test]
    fn single_unit_net_is_a_pure_sine() {
        // One hidden unit with unit weights: f(x) = sin(omega0 * x).
        let mut net = init_siren(1, &[1], 30.0, 0).unwrap();
        net.layers[0].w[0] = 1.0;
        net.layers[0].b[0] = 0.0;
        net.layers[1].w[0] = 1.0;
        net.layers[1].b[0] = 0.0;
        let x = 0.3;
        let jet = net.forward_jet(Point([x]));
        let a = 30.0 * x;
        assert_relative_eq!(jet.val, a.sin(), max_relative = 1e-15);
        assert_relative_eq!(jet.grad[0], 30.0 * a.cos(), max_relative = 1e-15);
        assert_relative_eq!(jet.hess[0][0], -900.0 * a.sin(), max_relative = 1e-15);
    }

    #[test]
    fn jet_value_equals_plain_forward_pass_bitwise() {
        let net = init_siren(2, &[16, 16], 30.0, 11).unwrap();
        let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(5);
        for _ in 0..100 {
            let x = Point([
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
            ]);
            let jet = net.forward_jet(x);
            assert_eq!(jet.val.to_bits(), net.forward_value(x).to_bits());
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let net = init_siren(3, &[16, 16], 30.0, 3).unwrap();
        let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(9);
        for _ in 0..50 {
            let x = Point([
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
            ]);
            let jet = net.forward_jet(x);
            for d in 0..3 {
                for e in 0..3 {
                    assert_eq!(jet.hess[d][e].to_bits(), jet.hess[e][d].to_bits());
                }
            }
        }
    }

    #[test]
    fn jets_match_finite_differences_on_random_nets() {
        // 20 random 2-input nets probed at random points; the FD oracle uses
        // the scalar forward pass only, so agreement validates every channel.
        for seed in 0..20u64 {
            let net = init_siren(2, &[16, 16], 30.0, seed).unwrap();
            let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed + 100);
            for _ in 0..5 {
                let x = Point([
                    rand::Rng::gen_range(&mut rng, -0.9..0.9),
                    rand::Rng::gen_range(&mut rng, -0.9..0.9),
                ]);
                let jet = net.forward_jet(x);
                let fd = finite_difference_jet(&|p| net.forward_value(p), x, 1e-5);
                assert_relative_eq!(jet.val, fd.val, max_relative = 1e-9, epsilon = 1e-9);
                for d in 0..2 {
                    assert_relative_eq!(jet.grad[d], fd.grad[d], max_relative = 1e-5, epsilon = 1e-5);
                    for e in 0..2 {
                        assert_relative_eq!(
                            jet.hess[d][e],
                            fd.hess[d][e],
                            max_relative = 1e-4,
                            epsilon = 1e-3
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn three_input_jets_match_finite_differences() {
        let net = init_siren(3, &[16, 16], 30.0, 77).unwrap();
        let x = Point([0.2, -0.4, 0.6]);
        let jet = net.forward_jet(x);
        let fd = finite_difference_jet(&|p| net.forward_value(p), x, 1e-5);
        for d in 0..3 {
            assert_relative_eq!(jet.grad[d], fd.grad[d], max_relative = 1e-5, epsilon = 1e-5);
            for e in 0..3 {
                assert_relative_eq!(jet.hess[d][e], fd.hess[d][e], max_relative = 1e-4, epsilon = 1e-3);
            }
        }
    }
}
