//! Mini-batch training loop.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::grad::backward;
use super::loss::bce_loss;
use super::model::{forward, ModelParams};
use super::NnError;

/// One pass over the data in mini-batches: shuffle with the caller's RNG,
/// then a backward pass and an Adam step per batch.
///
/// Drivers that need per-epoch control (evaluation between epochs) call
/// this directly with a persistent RNG; `train_epochs` is this in a loop.
pub fn train_single_epoch(
    params: &mut ModelParams,
    state: &mut AdamState,
    features: ArrayView2<f64>,
    labels: &[u8],
    batch_size: usize,
    adam: &AdamConfig,
    rng: &mut impl rand::Rng,
) -> Result<(), NnError> {
    if batch_size == 0 {
        return Err(NnError::ZeroBatchSize);
    }
    if features.nrows() == 0 {
        return Err(NnError::Empty);
    }
    if features.nrows() != labels.len() {
        return Err(NnError::LengthMismatch { left: features.nrows(), right: labels.len() });
    }
    let mut order: Vec<usize> = (0..features.nrows()).collect();
    order.shuffle(rng);
    for chunk in order.chunks(batch_size) {
        let batch_x = features.select(Axis(0), chunk);
        let batch_y: Vec<u8> = chunk.iter().map(|&i| labels[i]).collect();
        let grads = backward(params, batch_x.view(), &batch_y)?;
        adam_step(params, &grads, state, adam)?;
    }
    Ok(())
}

/// Trains for a number of epochs with seeded per-epoch shuffling and
/// returns the updated parameters together with the mean loss over the full
/// training set after the final step.
///
/// The Adam state is carried across batches and epochs, so a caller can
/// continue training by passing the same state back in.
#[allow(clippy::too_many_arguments)]
pub fn train_epochs(
    params: &ModelParams,
    state: &mut AdamState,
    features: ArrayView2<f64>,
    labels: &[u8],
    epochs: usize,
    batch_size: usize,
    adam: &AdamConfig,
    seed: u64,
) -> Result<(ModelParams, f64), NnError> {
    if epochs == 0 {
        return Err(NnError::ZeroEpochs);
    }
    if batch_size == 0 {
        return Err(NnError::ZeroBatchSize);
    }
    if features.nrows() == 0 {
        return Err(NnError::Empty);
    }
    if features.nrows() != labels.len() {
        return Err(NnError::LengthMismatch { left: features.nrows(), right: labels.len() });
    }

    let mut current = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        train_single_epoch(&mut current, state, features, labels, batch_size, adam, &mut rng)?;
    }
    let probs = forward(&current, features)?;
    let final_loss = bce_loss(probs.as_slice().expect("contiguous"), labels)?;
    Ok((current, final_loss))
}
