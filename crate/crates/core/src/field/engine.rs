//! Batched jet propagation and reverse-mode parameter gradients.
//!
//! Points are processed in fixed-size chunks. Within a chunk, every layer is
//! one dense GEMM over a channel-blocked state matrix: for each point the
//! rows hold the value, the D gradient components, and the D(D+1)/2 packed
//! Hessian components of every unit, so derivative propagation rides the
//! same matrix product as the values. The elementwise sine mixes channels
//! per unit in closed form. The backward pass runs the transposed GEMMs and
//! accumulates per-chunk parameter gradients, which are then reduced in
//! chunk order; results are therefore bit-identical for any thread count.

use matrixmultiply::dgemm;
use rayon::prelude::*;

use crate::field::jet::Jet2;
use crate::field::net::{ParamGradient, SirenNet};
use crate::geometry::Point;

/// Points per chunk; sized so a chunk's state buffers stay cache-friendly.
pub(crate) const CHUNK: usize = 256;

/// Number of jet channels carried per point: value, gradient, packed Hessian.
fn n_channels(d: usize) -> usize {
    1 + d + d * (d + 1) / 2
}

/// Packed upper-triangle index pairs in fixed (row-major, d <= e) order.
fn hess_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * (d + 1) / 2);
    for a in 0..d {
        for b in a..d {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Safe wrapper over `matrixmultiply::dgemm`; strides in elements.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let max_idx = |rows: usize, cols: usize, rs: isize, cs: isize| {
        (rows as isize - 1) * rs + (cols as isize - 1) * cs
    };
    debug_assert!(max_idx(m, k, rsa, csa) < a.len() as isize);
    debug_assert!(max_idx(k, n, rsb, csb) < b.len() as isize);
    debug_assert!(max_idx(m, n, rsc, csc) < c.len() as isize);
    unsafe {
        dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Per-thread scratch: layer states for one chunk, reused across chunks.
struct Workspace {
    /// Input state of each affine layer, `[nch * CHUNK, widths[l]]` row-major.
    xs: Vec<Vec<f64>>,
    /// Pre-activation output of each affine layer, `[nch * CHUNK, widths[l+1]]`.
    ps: Vec<Vec<f64>>,
    /// Sine and cosine of the scaled pre-activations, `[CHUNK, widths[l+1]]`.
    ss: Vec<Vec<f64>>,
    cc: Vec<Vec<f64>>,
    /// Ping-pong adjoint buffers, `[nch * CHUNK, max width]`.
    adj_pre: Vec<f64>,
    adj_post: Vec<f64>,
}

impl Workspace {
    fn new(net: &SirenNet, d: usize) -> Self {
        let nch = n_channels(d);
        let widths = net.widths();
        let n = net.layers.len();
        let rows = nch * CHUNK;
        Workspace {
            xs: (0..n).map(|l| vec![0.0; rows * widths[l]]).collect(),
            ps: (0..n).map(|l| vec![0.0; rows * widths[l + 1]]).collect(),
            ss: (0..n - 1).map(|l| vec![0.0; CHUNK * widths[l + 1]]).collect(),
            cc: (0..n - 1).map(|l| vec![0.0; CHUNK * widths[l + 1]]).collect(),
            adj_pre: vec![0.0; rows * net.max_width()],
            adj_post: vec![0.0; rows * net.max_width()],
        }
    }
}

/// Forward jet propagation for one chunk; fills `ws` for a later backward.
fn forward_chunk<const D: usize>(
    net: &SirenNet,
    ws: &mut Workspace,
    pts: &[Point<D>],
    pairs: &[(usize, usize)],
) {
    let nch = n_channels(D);
    let c = pts.len();
    let n = net.layers.len();
    let w0 = net.omega0;

    let x0 = &mut ws.xs[0];
    x0[..nch * c * D].fill(0.0);
    for (p, pt) in pts.iter().enumerate() {
        let base = p * nch * D;
        for i in 0..D {
            x0[base + i] = pt[i];
        }
        for d in 0..D {
            x0[base + (1 + d) * D + d] = 1.0;
        }
    }

    for l in 0..n {
        let layer = &net.layers[l];
        let (win, wout) = (layer.cols, layer.rows);
        let m = nch * c;
        // ps[l] = xs[l] * W^T; W is row-major [wout, win].
        {
            let (xin, pout) = (&ws.xs[l], &mut ws.ps[l]);
            gemm(
                m, win, wout, 1.0, xin, win as isize, 1, &layer.w, 1, win as isize, 0.0, pout,
                wout as isize, 1,
            );
        }
        // Bias feeds the value channel only; derivative channels are linear.
        let pout = &mut ws.ps[l];
        for p in 0..c {
            let row = p * nch * wout;
            for (j, &bj) in layer.b.iter().enumerate() {
                pout[row + j] += bj;
            }
        }
        if l + 1 < n {
            let (pre, post) = (&ws.ps[l], &mut ws.xs[l + 1]);
            let (ss, cc) = (&mut ws.ss[l], &mut ws.cc[l]);
            for p in 0..c {
                let t0 = p * nch * wout;
                let sc = p * wout;
                for j in 0..wout {
                    let arg = w0 * pre[t0 + j];
                    let s = arg.sin();
                    let co = arg.cos();
                    ss[sc + j] = s;
                    cc[sc + j] = co;
                    post[t0 + j] = s;
                }
                for d in 0..D {
                    let gd = t0 + (1 + d) * wout;
                    for j in 0..wout {
                        post[gd + j] = w0 * cc[sc + j] * pre[gd + j];
                    }
                }
                for (q, &(d, e)) in pairs.iter().enumerate() {
                    let hq = t0 + (1 + D + q) * wout;
                    let gd = t0 + (1 + d) * wout;
                    let ge = t0 + (1 + e) * wout;
                    for j in 0..wout {
                        post[hq + j] = w0 * cc[sc + j] * pre[hq + j]
                            - w0 * w0 * ss[sc + j] * pre[gd + j] * pre[ge + j];
                    }
                }
            }
        }
    }
}

/// Reads the jet of local point `p` from the final layer's output column.
fn unpack_jet<const D: usize>(out: &[f64], p: usize, pairs: &[(usize, usize)]) -> Jet2<D> {
    let nch = n_channels(D);
    let base = p * nch;
    let mut jet = Jet2::ZERO;
    jet.val = out[base];
    for d in 0..D {
        jet.grad[d] = out[base + 1 + d];
    }
    for (q, &(d, e)) in pairs.iter().enumerate() {
        let h = out[base + 1 + D + q];
        jet.hess[d][e] = h;
        jet.hess[e][d] = h;
    }
    jet
}

/// Writes the adjoint seed of local point `p`, folding the symmetric
/// off-diagonal pair into its single packed channel.
fn pack_seed<const D: usize>(buf: &mut [f64], p: usize, seed: &Jet2<D>, pairs: &[(usize, usize)]) {
    let nch = n_channels(D);
    let base = p * nch;
    buf[base] = seed.val;
    for d in 0..D {
        buf[base + 1 + d] = seed.grad[d];
    }
    for (q, &(d, e)) in pairs.iter().enumerate() {
        buf[base + 1 + D + q] = if d == e {
            seed.hess[d][d]
        } else {
            seed.hess[d][e] + seed.hess[e][d]
        };
    }
}

/// Reverse pass for one chunk; seeds must already sit in `ws.adj_pre` shaped
/// `[nch * c, 1]`. Accumulates into `partial`.
fn backward_chunk<const D: usize>(
    net: &SirenNet,
    ws: &mut Workspace,
    partial: &mut ParamGradient,
    c: usize,
    pairs: &[(usize, usize)],
) {
    let nch = n_channels(D);
    let n = net.layers.len();
    let w0 = net.omega0;
    let m = nch * c;

    for l in (0..n).rev() {
        let layer = &net.layers[l];
        let (win, wout) = (layer.cols, layer.rows);
        // W gradient: adj_pre^T * xs[l], accumulated.
        gemm(
            wout,
            m,
            win,
            1.0,
            &ws.adj_pre,
            1,
            wout as isize,
            &ws.xs[l],
            win as isize,
            1,
            1.0,
            &mut partial.w[l],
            win as isize,
            1,
        );
        // Bias gradient: value-channel rows only.
        for p in 0..c {
            let row = p * nch * wout;
            for j in 0..wout {
                partial.b[l][j] += ws.adj_pre[row + j];
            }
        }
        if l == 0 {
            break;
        }
        // Input adjoint: adj_pre * W.
        {
            let (a, out) = (&ws.adj_pre, &mut ws.adj_post);
            gemm(
                m, wout, win, 1.0, a, wout as isize, 1, &layer.w, win as isize, 1, 0.0, out,
                win as isize, 1,
            );
        }
        // Sine backward of layer l-1: post-activation adjoint -> pre.
        let pre = &ws.ps[l - 1];
        let (ss, cc) = (&ws.ss[l - 1], &ws.cc[l - 1]);
        let (post_adj, pre_adj) = (&ws.adj_post, &mut ws.adj_pre);
        let w = win;
        for p in 0..c {
            let t0 = p * nch * w;
            let sc = p * w;
            let v = t0;
            for j in 0..w {
                pre_adj[v + j] = post_adj[v + j] * w0 * cc[sc + j];
            }
            for d in 0..D {
                let gd = t0 + (1 + d) * w;
                for j in 0..w {
                    pre_adj[v + j] -= post_adj[gd + j] * w0 * w0 * ss[sc + j] * pre[gd + j];
                }
            }
            for (q, &(d, e)) in pairs.iter().enumerate() {
                let hq = t0 + (1 + D + q) * w;
                let gd = t0 + (1 + d) * w;
                let ge = t0 + (1 + e) * w;
                for j in 0..w {
                    pre_adj[v + j] -= post_adj[hq + j]
                        * (w0 * w0 * ss[sc + j] * pre[hq + j]
                            + w0 * w0 * w0 * cc[sc + j] * pre[gd + j] * pre[ge + j]);
                }
            }
            for d in 0..D {
                let gd = t0 + (1 + d) * w;
                for j in 0..w {
                    pre_adj[gd + j] = post_adj[gd + j] * w0 * cc[sc + j];
                }
            }
            for (q, &(d, e)) in pairs.iter().enumerate() {
                let hq = t0 + (1 + D + q) * w;
                let gd = t0 + (1 + d) * w;
                let ge = t0 + (1 + e) * w;
                for j in 0..w {
                    let t = -w0 * w0 * ss[sc + j] * post_adj[hq + j];
                    pre_adj[gd + j] += t * pre[ge + j];
                    pre_adj[ge + j] += t * pre[gd + j];
                }
            }
            for (q, _) in pairs.iter().enumerate() {
                let hq = t0 + (1 + D + q) * w;
                for j in 0..w {
                    pre_adj[hq + j] = post_adj[hq + j] * w0 * cc[sc + j];
                }
            }
        }
    }
}

/// Jets of `pts` in input order, computed chunkwise; parallel but with a
/// thread-count-independent result.
pub fn forward_jets<const D: usize>(net: &SirenNet, pts: &[Point<D>]) -> Vec<Jet2<D>> {
    assert_eq!(net.input_dim, D, "network input dim mismatch");
    let pairs = hess_pairs(D);
    let chunk_jets: Vec<Vec<Jet2<D>>> = pts
        .par_chunks(CHUNK)
        .map_init(
            || Workspace::new(net, D),
            |ws, chunk| {
                forward_chunk(net, ws, chunk, &pairs);
                let out = &ws.ps[net.layers.len() - 1];
                (0..chunk.len()).map(|p| unpack_jet(out, p, &pairs)).collect()
            },
        )
        .collect();
    chunk_jets.into_iter().flatten().collect()
}

/// Runs forward and reverse over `pts`. For every point, `per_point` maps
/// its global index and jet to an adjoint seed plus four accumulator slots;
/// slot sums (point order) and the parameter gradient (chunk order) come
/// back bit-identical for any thread count.
pub fn loss_pass<const D: usize, F>(
    net: &SirenNet,
    pts: &[Point<D>],
    per_point: &F,
) -> ([f64; 4], ParamGradient)
where
    F: Fn(usize, &Jet2<D>) -> (Jet2<D>, [f64; 4]) + Sync,
{
    assert_eq!(net.input_dim, D, "network input dim mismatch");
    let pairs = hess_pairs(D);
    let n = net.layers.len();
    let partials: Vec<([f64; 4], ParamGradient)> = pts
        .par_chunks(CHUNK)
        .enumerate()
        .map_init(
            || Workspace::new(net, D),
            |ws, (ci, chunk)| {
                forward_chunk(net, ws, chunk, &pairs);
                let mut terms = [0.0; 4];
                for p in 0..chunk.len() {
                    let jet = unpack_jet::<D>(&ws.ps[n - 1], p, &pairs);
                    let (seed, contrib) = per_point(ci * CHUNK + p, &jet);
                    for (t, c) in terms.iter_mut().zip(contrib) {
                        *t += c;
                    }
                    pack_seed(&mut ws.adj_pre, p, &seed, &pairs);
                }
                let mut partial = ParamGradient::zeros_like(net);
                backward_chunk::<D>(net, ws, &mut partial, chunk.len(), &pairs);
                (terms, partial)
            },
        )
        .collect();

    let mut terms = [0.0; 4];
    let mut grad = ParamGradient::zeros_like(net);
    for (t, g) in &partials {
        for (acc, v) in terms.iter_mut().zip(t) {
            *acc += v;
        }
        grad.add_assign(g);
    }
    (terms, grad)
}
