//! Sine-activated MLP with exact first- and second-order jet propagation.
//!
//! `net` holds the parameters and the per-point reference evaluation paths;
//! `engine` runs the batched GEMM forward/backward used by training;
//! `checkpoint` persists parameters; `jet` carries value/gradient/Hessian
//! triples and the shifted-determinant helpers.

mod checkpoint;
mod engine;
mod jet;
mod net;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use engine::{forward_jets, loss_pass};
pub use jet::{cofactor_shifted, det_shifted, Jet2};
pub use net::{init_siren, LayerParams, ParamGradient, SirenNet, DEFAULT_OMEGA0};
