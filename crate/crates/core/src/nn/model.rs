//! Network shape, initialization and the forward pass.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::loss::PROB_CLAMP;
use super::NnError;

/// Shape of the classifier: input width and one entry per hidden layer.
/// The output layer is always a single sigmoid unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_units: Vec<usize>,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_units: Vec<usize>) -> Result<Self, NnError> {
        let arch = Architecture { input_dim, hidden_units };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_dim == 0 {
            return Err(NnError::InvalidArchitecture("input_dim must be at least 1".into()));
        }
        if self.hidden_units.is_empty() {
            return Err(NnError::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        if self.hidden_units.contains(&0) {
            return Err(NnError::InvalidArchitecture("hidden layer width 0".into()));
        }
        Ok(())
    }

    /// (fan_in, fan_out) per layer, output layer included.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_units.len() + 1);
        let mut fan_in = self.input_dim;
        for &units in &self.hidden_units {
            dims.push((fan_in, units));
            fan_in = units;
        }
        dims.push((fan_in, 1));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// One dense layer: weights are (fan_in, fan_out), bias has one entry per
/// output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Full parameter set, hidden layers first, output layer last.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
}

impl ModelParams {
    pub fn architecture(&self) -> Architecture {
        let input_dim = self.layers[0].weights.nrows();
        let hidden_units = self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.weights.ncols())
            .collect();
        Architecture { input_dim, hidden_units }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite()))
    }
}

/// He-initializes a model: each weight is drawn from a normal with mean 0
/// and standard deviation sqrt(2 / fan_in), biases start at zero. Weights
/// are drawn layer by layer in row-major order so a seed pins every value.
pub fn init_model(arch: &Architecture, seed: u64) -> Result<ModelParams, NnError> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(arch.hidden_units.len() + 1);
    for (fan_in, fan_out) in arch.layer_dims() {
        let std_dev = (2.0 / fan_in as f64).sqrt();
        let normal = Normal::new(0.0, std_dev).expect("finite std dev");
        let mut values = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            values.push(normal.sample(&mut rng));
        }
        let weights = Array2::from_shape_vec((fan_in, fan_out), values).expect("shape matches");
        layers.push(Layer { weights, bias: Array1::zeros(fan_out) });
    }
    Ok(ModelParams { layers })
}

pub(crate) fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Runs a batch through the network and returns one probability per row.
/// Outputs are clamped away from exact 0 and 1 so downstream log terms are
/// always finite.
pub fn forward(params: &ModelParams, x: ArrayView2<f64>) -> Result<Array1<f64>, NnError> {
    let input_dim = params.layers[0].weights.nrows();
    if x.ncols() != input_dim {
        return Err(NnError::InputWidthMismatch { expected: input_dim, got: x.ncols() });
    }
    let mut activation = x.to_owned();
    let (hidden, output) = params.layers.split_at(params.layers.len() - 1);
    for layer in hidden {
        let mut z = activation.dot(&layer.weights);
        z += &layer.bias;
        activation = relu(&z);
    }
    let out = &output[0];
    let mut z = activation.dot(&out.weights);
    z += &out.bias;
    Ok(z.index_axis(Axis(1), 0)
        .mapv(|v| sigmoid(v).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)))
}

/// Thresholds probabilities into hard labels; a probability exactly at the
/// threshold counts as positive.
pub fn predict(params: &ModelParams, x: ArrayView2<f64>, threshold: f64) -> Result<Vec<u8>, NnError> {
    if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
        return Err(NnError::InvalidThreshold(threshold));
    }
    let probs = forward(params, x)?;
    Ok(probs.iter().map(|&p| u8::from(p >= threshold)).collect())
}
