//! One communication round: client selection, local training, aggregation.

use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{AdamConfig, AdamState, ModelParams, NnError};
use crate::seeding::selection_seed;

use super::FedError;

/// Parameters returned by one client after local training.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: ModelParams,
    pub n_samples: usize,
    pub train_loss: f64,
}

/// Picks the clients that train this round.
///
/// The selected count is max(1, round(M * fraction_fit)) capped at M, drawn
/// without replacement from a generator keyed on (seed, round) so that round
/// r always selects the same subset for a given experiment seed. Returned
/// ids are sorted ascending.
pub fn select_clients(n_clients: usize, fraction_fit: f64, seed: u64, round: usize) -> Vec<usize> {
    assert!(n_clients > 0, "cannot select from zero clients");
    assert!(
        fraction_fit > 0.0 && fraction_fit <= 1.0,
        "fraction_fit {fraction_fit} must lie in (0, 1]"
    );
    let want = (n_clients as f64 * fraction_fit).round() as usize;
    let count = want.clamp(1, n_clients);
    let mut rng = ChaCha8Rng::seed_from_u64(selection_seed(seed, round));
    let mut picked = rand::seq::index::sample(&mut rng, n_clients, count).into_vec();
    picked.sort_unstable();
    picked
}

/// Trains a local copy of the global model on one client's partition.
#[allow(clippy::too_many_arguments)]
pub fn client_update(
    global: &ModelParams,
    client_id: usize,
    features: ArrayView2<f64>,
    labels: &[u8],
    local_epochs: usize,
    batch_size: usize,
    adam: &AdamConfig,
    train_seed: u64,
) -> Result<ClientUpdate, NnError> {
    let mut state = AdamState::new(global);
    let (params, train_loss) = crate::nn::train_epochs(
        global,
        &mut state,
        features,
        labels,
        local_epochs,
        batch_size,
        adam,
        train_seed,
    )?;
    Ok(ClientUpdate { client_id, params, n_samples: labels.len(), train_loss })
}

/// Federated averaging of client updates.
///
/// Updates are first ordered by client id so the summation order never
/// depends on scheduling. Three regimes:
///
/// * all updates bitwise identical: the common parameters are returned
///   unchanged, so averaging K copies of w yields exactly w;
/// * all sample counts equal: the plain mean sum(w_k) / K;
/// * otherwise: the weighted mean sum(n_k * w_k) / sum(n_k).
pub fn aggregate_fedavg(updates: &[ClientUpdate]) -> Result<ModelParams, FedError> {
    if updates.is_empty() {
        return Err(FedError::EmptyUpdates);
    }
    let mut ordered: Vec<&ClientUpdate> = updates.iter().collect();
    ordered.sort_by_key(|u| u.client_id);
    for pair in ordered.windows(2) {
        if pair[0].client_id == pair[1].client_id {
            return Err(FedError::DuplicateClient(pair[0].client_id));
        }
    }
    let first = ordered[0];
    for u in &ordered[1..] {
        if !same_shape(&first.params, &u.params) {
            return Err(FedError::ArchMismatch { client: u.client_id });
        }
    }
    for u in &ordered {
        if u.n_samples == 0 {
            return Err(FedError::ZeroSampleCount { client: u.client_id });
        }
    }

    if ordered[1..].iter().all(|u| bitwise_equal(&first.params, &u.params)) {
        return Ok(first.params.clone());
    }

    let equal_counts = ordered[1..].iter().all(|u| u.n_samples == first.n_samples);
    let mut acc = first.params.clone();
    if equal_counts {
        for u in &ordered[1..] {
            add_assign(&mut acc, &u.params, 1.0);
        }
        divide(&mut acc, ordered.len() as f64);
    } else {
        multiply(&mut acc, first.n_samples as f64);
        let mut total = first.n_samples;
        for u in &ordered[1..] {
            add_assign(&mut acc, &u.params, u.n_samples as f64);
            total += u.n_samples;
        }
        divide(&mut acc, total as f64);
    }
    Ok(acc)
}

fn same_shape(a: &ModelParams, b: &ModelParams) -> bool {
    a.layers.len() == b.layers.len()
        && a.layers.iter().zip(&b.layers).all(|(x, y)| {
            x.weights.dim() == y.weights.dim() && x.bias.len() == y.bias.len()
        })
}

fn bitwise_equal(a: &ModelParams, b: &ModelParams) -> bool {
    a.layers.iter().zip(&b.layers).all(|(x, y)| {
        x.weights
            .iter()
            .zip(y.weights.iter())
            .all(|(p, q)| p.to_bits() == q.to_bits())
            && x.bias.iter().zip(y.bias.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
    })
}

fn add_assign(acc: &mut ModelParams, other: &ModelParams, weight: f64) {
    for (dst, src) in acc.layers.iter_mut().zip(&other.layers) {
        if weight == 1.0 {
            dst.weights += &src.weights;
            dst.bias += &src.bias;
        } else {
            dst.weights.zip_mut_with(&src.weights, |d, s| *d += weight * s);
            dst.bias.zip_mut_with(&src.bias, |d, s| *d += weight * s);
        }
    }
}

fn multiply(params: &mut ModelParams, factor: f64) {
    for layer in &mut params.layers {
        layer.weights.mapv_inplace(|w| w * factor);
        layer.bias.mapv_inplace(|b| b * factor);
    }
}

fn divide(params: &mut ModelParams, divisor: f64) {
    for layer in &mut params.layers {
        layer.weights.mapv_inplace(|w| w / divisor);
        layer.bias.mapv_inplace(|b| b / divisor);
    }
}
