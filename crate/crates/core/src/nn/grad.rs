//! Backpropagation of the mean binary cross-entropy.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::model::{relu, sigmoid, ModelParams};
use super::NnError;

/// Gradient of one layer, same shapes as the layer itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradients for every layer of a model, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LayerGrad {
                weights: Array2::zeros(l.weights.raw_dim()),
                bias: Array1::zeros(l.bias.raw_dim()),
            })
            .collect();
        Gradients { layers }
    }
}

/// Computes the gradient of the mean binary cross-entropy over a batch with
/// respect to every weight and bias.
///
/// The sigmoid output and the cross-entropy combine to the usual shortcut
/// `dL/dz = p - y` at the output unit. The ReLU derivative at exactly zero
/// is taken to be zero.
pub fn backward(
    params: &ModelParams,
    x: ArrayView2<f64>,
    y: &[u8],
) -> Result<Gradients, NnError> {
    let input_dim = params.layers[0].weights.nrows();
    if x.ncols() != input_dim {
        return Err(NnError::InputWidthMismatch { expected: input_dim, got: x.ncols() });
    }
    if x.nrows() != y.len() {
        return Err(NnError::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    if y.is_empty() {
        return Err(NnError::Empty);
    }
    if let Some(index) = y.iter().position(|&v| v > 1) {
        return Err(NnError::InvalidLabel { index, value: y[index] });
    }

    let n_layers = params.layers.len();
    let batch = x.nrows() as f64;

    // Forward pass, caching the input of every layer and each hidden
    // pre-activation for the ReLU mask.
    let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
    let mut pre_acts: Vec<Array2<f64>> = Vec::with_capacity(n_layers - 1);
    let mut activation = x.to_owned();
    for layer in &params.layers[..n_layers - 1] {
        inputs.push(activation.clone());
        let mut z = activation.dot(&layer.weights);
        z += &layer.bias;
        activation = relu(&z);
        pre_acts.push(z);
    }
    inputs.push(activation.clone());
    let out_layer = &params.layers[n_layers - 1];
    let mut z_out = activation.dot(&out_layer.weights);
    z_out += &out_layer.bias;
    let probs = z_out.mapv(sigmoid);

    // Output delta: (p - y) / n for the mean loss.
    let mut delta = probs;
    for (mut row, &label) in delta.rows_mut().into_iter().zip(y) {
        row[0] = (row[0] - f64::from(label)) / batch;
    }

    let mut layers: Vec<LayerGrad> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let grad_w = inputs[l].t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        layers.push(LayerGrad { weights: grad_w, bias: grad_b });
        if l > 0 {
            let mut upstream = delta.dot(&params.layers[l].weights.t());
            upstream.zip_mut_with(&pre_acts[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = upstream;
        }
    }
    layers.reverse();
    Ok(Gradients { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{bce_loss, forward, init_model, Architecture};
    use ndarray::array;

    /// Central finite difference of the loss with respect to a single
    /// parameter, disturbing it by +-h.
    fn fd_gradient(
        params: &ModelParams,
        x: ArrayView2<f64>,
        y: &[u8],
        pick: impl Fn(&mut ModelParams) -> &mut f64,
        h: f64,
    ) -> f64 {
        let mut plus = params.clone();
        *pick(&mut plus) += h;
        let loss_plus = bce_loss(forward(&plus, x).unwrap().as_slice().unwrap(), y).unwrap();
        let mut minus = params.clone();
        *pick(&mut minus) -= h;
        let loss_minus = bce_loss(forward(&minus, x).unwrap().as_slice().unwrap(), y).unwrap();
        (loss_plus - loss_minus) / (2.0 * h)
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    /// True when no hidden pre-activation sits within `margin` of the ReLU
    /// kink, where finite differences are invalid.
    fn kink_free(params: &ModelParams, x: ArrayView2<f64>, margin: f64) -> bool {
        let mut activation = x.to_owned();
        for layer in &params.layers[..params.layers.len() - 1] {
            let mut z = activation.dot(&layer.weights);
            z += &layer.bias;
            if z.iter().any(|v| v.abs() < margin) {
                return false;
            }
            activation = relu(&z);
        }
        true
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let arch = Architecture::new(4, vec![5, 3]).unwrap();
        let mut params = init_model(&arch, 77).unwrap();
        // Zero-initialized biases can leave pre-activations exactly at the
        // ReLU kink; nudge them so the check stays on differentiable ground.
        for (i, layer) in params.layers.iter_mut().enumerate() {
            for (j, b) in layer.bias.iter_mut().enumerate() {
                *b = 0.07 + 0.11 * ((i + j) % 3) as f64;
            }
        }
        let x = array![
            [0.3, -1.2, 0.8, 0.1],
            [1.5, 0.2, -0.7, -0.4],
            [-0.9, 0.6, 0.05, 1.1],
        ];
        let y = [1u8, 0, 1];
        assert!(kink_free(&params, x.view(), 1e-3), "test net must avoid the ReLU kink");
        let grads = backward(&params, x.view(), &y).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for l in 0..params.layers.len() {
            let (rows, cols) = params.layers[l].weights.dim();
            for r in 0..rows {
                for c in 0..cols {
                    let fd = fd_gradient(&params, x.view(), &y, |p| &mut p.layers[l].weights[[r, c]], h);
                    worst = worst.max(relative_error(fd, grads.layers[l].weights[[r, c]]));
                }
            }
            for b in 0..params.layers[l].bias.len() {
                let fd = fd_gradient(&params, x.view(), &y, |p| &mut p.layers[l].bias[b], h);
                worst = worst.max(relative_error(fd, grads.layers[l].bias[b]));
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst} exceeds tolerance");
    }

    #[test]
    fn relu_kink_contributes_zero_gradient() {
        // Input 0 with zero bias puts the hidden pre-activation exactly at
        // the kink; the chosen subgradient there is zero.
        let params = ModelParams {
            layers: vec![
                crate::nn::Layer { weights: array![[1.0]], bias: array![0.0] },
                crate::nn::Layer { weights: array![[2.0]], bias: array![0.0] },
            ],
        };
        let grads = backward(&params, array![[0.0]].view(), &[1]).unwrap();
        assert_eq!(grads.layers[0].weights[[0, 0]], 0.0);
        assert_eq!(grads.layers[0].bias[0], 0.0);
        // The output layer still learns through its bias.
        assert!(grads.layers[1].bias[0] != 0.0);
    }

    #[test]
    fn gradient_shapes_mirror_parameters() {
        let arch = Architecture::new(6, vec![4, 2]).unwrap();
        let params = init_model(&arch, 9).unwrap();
        let x = ndarray::Array2::from_elem((5, 6), 0.25);
        let grads = backward(&params, x.view(), &[1, 0, 1, 0, 1]).unwrap();
        assert_eq!(grads.layers.len(), params.layers.len());
        for (g, p) in grads.layers.iter().zip(&params.layers) {
            assert_eq!(g.weights.dim(), p.weights.dim());
            assert_eq!(g.bias.len(), p.bias.len());
        }
    }

    #[test]
    fn backward_rejects_bad_input() {
        let arch = Architecture::new(3, vec![2]).unwrap();
        let params = init_model(&arch, 1).unwrap();
        let x = ndarray::Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            backward(&params, x.view(), &[1]),
            Err(NnError::LengthMismatch { .. })
        ));
        let empty = ndarray::Array2::<f64>::zeros((0, 3));
        assert!(matches!(backward(&params, empty.view(), &[]), Err(NnError::Empty)));
        assert!(matches!(
            backward(&params, x.view(), &[1, 3]),
            Err(NnError::InvalidLabel { index: 1, value: 3 })
        ));
    }
}
