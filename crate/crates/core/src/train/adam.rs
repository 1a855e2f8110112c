//! Adam with bias correction over the flat weight and bias vectors of a
//! sine-activated net.

use crate::error::{Error, Result};
use crate::field::{ParamGradient, SirenNet};

/// First and second moment accumulators plus the hyperparameters that drive
/// them; shapes mirror the network's parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: ParamGradient,
    pub v: ParamGradient,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zeroed moments for `net` with the standard (0.9, 0.999, 1e-8)
    /// hyperparameters.
    pub fn new(net: &SirenNet) -> Self {
        AdamState {
            m: ParamGradient::zeros_like(net),
            v: ParamGradient::zeros_like(net),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

fn update_slice(
    params: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    bc1: f64,
    bc2: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) {
    for i in 0..params.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// One bias-corrected Adam update of `net` in place; increments the step
/// counter. A non-finite gradient aborts before touching any state.
pub fn adam_step(
    net: &mut SirenNet,
    grad: &ParamGradient,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !grad.is_finite() {
        return Err(Error::NumericalFailure {
            term: "gradient",
            detail: "non-finite gradient entering the optimizer step".into(),
        });
    }
    if grad.w.len() != net.layers.len()
        || net
            .layers
            .iter()
            .zip(grad.w.iter().zip(grad.b.iter()))
            .any(|(l, (gw, gb))| gw.len() != l.w.len() || gb.len() != l.b.len())
    {
        return Err(Error::InvalidConfig(
            "gradient shape does not match network parameters".into(),
        ));
    }
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    for (l, layer) in net.layers.iter_mut().enumerate() {
        update_slice(
            &mut layer.w,
            &grad.w[l],
            &mut state.m.w[l],
            &mut state.v.w[l],
            lr,
            bc1,
            bc2,
            state.beta1,
            state.beta2,
            state.epsilon,
        );
        update_slice(
            &mut layer.b,
            &grad.b[l],
            &mut state.m.b[l],
            &mut state.v.b[l],
            lr,
            bc1,
            bc2,
            state.beta1,
            state.beta2,
            state.epsilon,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::init_siren;

    fn test_net() -> SirenNet {
        init_siren(2, &[8, 8], 30.0, 7).unwrap()
    }

    fn flat_params(net: &SirenNet) -> Vec<f64> {
        net.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    fn constant_gradient(net: &SirenNet, value: f64) -> ParamGradient {
        let mut g = ParamGradient::zeros_like(net);
        for gw in &mut g.w {
            gw.fill(value);
        }
        for gb in &mut g.b {
            gb.fill(value);
        }
        g
    }

    #[test]
    fn zero_gradient_leaves_fresh_parameters_untouched() {
        let mut net = test_net();
        let before = flat_params(&net);
        let mut state = AdamState::new(&net);
        let zero = ParamGradient::zeros_like(&net);
        for _ in 0..5 {
            adam_step(&mut net, &zero, &mut state, 1e-3).unwrap();
        }
        assert_eq!(flat_params(&net), before);
        assert_eq!(state.step, 5);
    }

    #[test]
    fn zero_gradient_decays_existing_moments() {
        let mut net = test_net();
        let mut state = AdamState::new(&net);
        let g = constant_gradient(&net, 2.0);
        adam_step(&mut net, &g, &mut state, 1e-3).unwrap();
        let m0 = state.m.max_abs();
        let v0 = state.v.max_abs();
        let zero = ParamGradient::zeros_like(&net);
        adam_step(&mut net, &zero, &mut state, 1e-3).unwrap();
        assert!((state.m.max_abs() - 0.9 * m0).abs() <= 1e-15 * m0);
        assert!((state.v.max_abs() - 0.999 * v0).abs() <= 1e-15 * v0);
    }

    #[test]
    fn first_step_moves_each_parameter_by_lr_times_sign() {
        let mut net = test_net();
        let before = flat_params(&net);
        let mut state = AdamState::new(&net);
        let mut g = ParamGradient::zeros_like(&net);
        // Mixed-sign gradient so both directions are exercised.
        for (l, gw) in g.w.iter_mut().enumerate() {
            for (i, e) in gw.iter_mut().enumerate() {
                *e = if (l + i) % 2 == 0 { 2.0 } else { -0.5 };
            }
        }
        for gb in &mut g.b {
            gb.fill(3.0);
        }
        let lr = 1e-3;
        adam_step(&mut net, &g, &mut state, lr).unwrap();
        let after = flat_params(&net);
        let flat_grad: Vec<f64> = g
            .w
            .iter()
            .zip(g.b.iter())
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect();
        for ((a, b), gi) in after.iter().zip(before.iter()).zip(flat_grad.iter()) {
            let delta = a - b;
            let expected = -lr * gi.signum();
            // After bias correction the first update is lr * g / (|g| + eps).
            assert!(
                (delta - expected).abs() < 1e-6 * lr,
                "delta {delta} expected {expected}"
            );
        }
    }

    #[test]
    fn constant_gradient_updates_approach_lr_magnitude() {
        let mut net = test_net();
        let mut state = AdamState::new(&net);
        let g = constant_gradient(&net, 0.37);
        let lr = 2e-3;
        let mut before = flat_params(&net);
        for step in 0..1000 {
            adam_step(&mut net, &g, &mut state, lr).unwrap();
            let after = flat_params(&net);
            for (a, b) in after.iter().zip(before.iter()) {
                let delta = (a - b).abs();
                assert!(
                    delta >= 0.9 * lr && delta <= lr * (1.0 + 1e-12),
                    "step {step}: |delta| {delta} outside [0.9, 1.0] x lr"
                );
            }
            before = after;
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_touching_state() {
        let mut net = test_net();
        let before = flat_params(&net);
        let mut state = AdamState::new(&net);
        let mut g = ParamGradient::zeros_like(&net);
        g.w[0][3] = f64::NAN;
        assert!(adam_step(&mut net, &g, &mut state, 1e-3).is_err());
        assert_eq!(flat_params(&net), before);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn mismatched_gradient_shape_is_rejected() {
        let mut net = test_net();
        let other = init_siren(2, &[4], 30.0, 1).unwrap();
        let mut state = AdamState::new(&net);
        let g = ParamGradient::zeros_like(&other);
        assert!(adam_step(&mut net, &g, &mut state, 1e-3).is_err());
    }
}
