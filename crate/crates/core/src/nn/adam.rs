//! Adam optimizer with bias correction.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::grad::{Gradients, LayerGrad};
use super::model::ModelParams;
use super::NnError;

/// Adam hyperparameters. Defaults are the standard ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { alpha: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<LayerGrad>,
    pub v: Vec<LayerGrad>,
}

impl AdamState {
    /// Fresh state with zero moments, shaped like the given parameters.
    pub fn new(params: &ModelParams) -> Self {
        let zeros = || {
            params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        AdamState { t: 0, m: zeros(), v: zeros() }
    }
}

/// Applies one Adam update in place:
/// m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2, then the bias-corrected
/// step theta <- theta - alpha * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), NnError> {
    if grads.layers.len() != params.layers.len() || state.m.len() != params.layers.len() {
        return Err(NnError::ShapeMismatch { layer: 0 });
    }
    for (layer, (g, p)) in grads.layers.iter().zip(&params.layers).enumerate() {
        if g.weights.dim() != p.weights.dim() || g.bias.len() != p.bias.len() {
            return Err(NnError::ShapeMismatch { layer });
        }
        if g.weights.iter().any(|v| !v.is_finite()) || g.bias.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteGradient { layer });
        }
    }

    state.t += 1;
    let t = state.t;
    let m_corr = 1.0 - cfg.beta1.powi(t as i32);
    let v_corr = 1.0 - cfg.beta2.powi(t as i32);

    let update = |theta: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / m_corr;
        let v_hat = *v / v_corr;
        *theta -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
    };

    for (layer, grad) in grads.layers.iter().enumerate() {
        let p = &mut params.layers[layer];
        let m = &mut state.m[layer];
        let v = &mut state.v[layer];
        for (((theta, &g), m), v) in p
            .weights
            .iter_mut()
            .zip(grad.weights.iter())
            .zip(m.weights.iter_mut())
            .zip(v.weights.iter_mut())
        {
            update(theta, g, m, v);
        }
        for (((theta, &g), m), v) in p
            .bias
            .iter_mut()
            .zip(grad.bias.iter())
            .zip(m.bias.iter_mut())
            .zip(v.bias.iter_mut())
        {
            update(theta, g, m, v);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, Layer};
    use ndarray::array;

    fn scalar_model(theta: f64) -> ModelParams {
        ModelParams {
            layers: vec![
                Layer { weights: array![[theta]], bias: array![0.0] },
                Layer { weights: array![[0.0]], bias: array![0.0] },
            ],
        }
    }

    fn constant_grads(params: &ModelParams, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(params);
        grads.layers[0].weights[[0, 0]] = g;
        grads
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = scalar_model(0.0);
        let grads = constant_grads(&params, 1.0);
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig::default();
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
        // Bias correction makes m_hat = v_hat = 1, so the step is a/(1+eps).
        let theta = params.layers[0].weights[[0, 0]];
        assert!((theta + 0.001).abs() < 1e-9, "theta after one step: {theta}");
        assert_eq!(state.t, 1);
    }

    #[test]
    fn two_steps_match_hand_rollout() {
        let cfg = AdamConfig::default();
        let mut params = scalar_model(0.0);
        let grads = constant_grads(&params, 1.0);
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();

        // Independent scalar rollout of the same recurrence.
        let (mut theta, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=2u32 {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * 1.0;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * 1.0;
            let m_hat = m / (1.0 - cfg.beta1.powi(t as i32));
            let v_hat = v / (1.0 - cfg.beta2.powi(t as i32));
            theta -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        let got = params.layers[0].weights[[0, 0]];
        assert!((got - theta).abs() < 1e-15, "vector {got} vs scalar {theta}");
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut params = scalar_model(0.0);
        let grads = constant_grads(&params, f64::NAN);
        let mut state = AdamState::new(&params);
        let result = adam_step(&mut params, &grads, &mut state, &AdamConfig::default());
        assert!(matches!(result, Err(NnError::NonFiniteGradient { layer: 0 })));
        // The failed step must not advance the counter.
        assert_eq!(state.t, 0);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let arch = Architecture::new(3, vec![2]).unwrap();
        let mut params = crate::nn::init_model(&arch, 1).unwrap();
        let other = crate::nn::init_model(&Architecture::new(4, vec![2]).unwrap(), 1).unwrap();
        let grads = Gradients::zeros_like(&other);
        let mut state = AdamState::new(&params);
        assert!(matches!(
            adam_step(&mut params, &grads, &mut state, &AdamConfig::default()),
            Err(NnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let arch = Architecture::new(3, vec![2]).unwrap();
        let mut params = crate::nn::init_model(&arch, 8).unwrap();
        let before = params.clone();
        let grads = Gradients::zeros_like(&params);
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(params, before);
    }
}
