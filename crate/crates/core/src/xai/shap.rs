//! Exact and permutation-sampled Shapley attribution.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::nn::{forward, ModelParams};
use crate::seeding::explain_seed;

use super::XaiError;

/// Largest feature count accepted by exact enumeration (2^d coalitions).
pub const EXACT_DIM_LIMIT: usize = 15;

/// Read-only scoring interface the explainer works against.
///
/// For the intrusion-detection model this is the pre-threshold probability;
/// test oracles plug in plain analytic functions through [`FnPredictor`].
pub trait Predictor: Sync {
    fn input_dim(&self) -> usize;
    /// Model output for each row of `x`. `x.ncols()` equals `input_dim`.
    fn predict_batch(&self, x: ArrayView2<f64>) -> Array1<f64>;
}

impl Predictor for ModelParams {
    fn input_dim(&self) -> usize {
        self.architecture().input_dim
    }

    fn predict_batch(&self, x: ArrayView2<f64>) -> Array1<f64> {
        forward(self, x).expect("explainer validates feature width before scoring")
    }
}

/// Adapts a closure over one feature vector into a [`Predictor`].
pub struct FnPredictor<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(ArrayView1<f64>) -> f64 + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn predict_batch(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.rows().into_iter().map(|row| (self.f)(row)).collect()
    }
}

/// Reference rows that stand in for absent features.
#[derive(Debug, Clone)]
pub struct BackgroundSet {
    pub data: Array2<f64>,
}

impl BackgroundSet {
    pub fn new(data: Array2<f64>) -> Result<Self, XaiError> {
        if data.nrows() == 0 {
            return Err(XaiError::EmptyBackground);
        }
        Ok(BackgroundSet { data })
    }

    /// Draws up to `max_rows` rows without replacement; smaller inputs are
    /// taken whole. Row order follows the original data either way.
    pub fn sample(
        features: ArrayView2<f64>,
        max_rows: usize,
        seed: u64,
    ) -> Result<Self, XaiError> {
        let n = features.nrows();
        if n == 0 || max_rows == 0 {
            return Err(XaiError::EmptyBackground);
        }
        if n <= max_rows {
            return BackgroundSet::new(features.to_owned());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, max_rows).into_vec();
        picked.sort_unstable();
        Ok(BackgroundSet { data: features.select(Axis(0), &picked) })
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }
}

/// Per-instance attribution vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapVector {
    /// Row index within the explained instance set.
    pub instance_id: usize,
    /// One attribution per feature; base_value + sum(phi) recovers the
    /// model output on the instance (exactly in exact mode, by residual
    /// redistribution in sampled mode).
    pub phi: Vec<f64>,
    /// Mean model output over the background set, v(empty).
    pub base_value: f64,
    /// True when sampled-mode residual redistribution touched `phi`.
    pub adjusted: bool,
}

/// Attribution algorithm choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Sampled { n_permutations: usize },
}

fn mean(values: &Array1<f64>) -> f64 {
    values.sum() / values.len() as f64
}

fn check_widths(
    model: &impl Predictor,
    instance: ArrayView1<f64>,
    background: &BackgroundSet,
) {
    let d = model.input_dim();
    assert_eq!(
        instance.len(),
        d,
        "instance has {} features, model expects {d}",
        instance.len()
    );
    assert_eq!(
        background.width(),
        d,
        "background has width {}, model expects {d}",
        background.width()
    );
}

/// Value of one coalition: the mean model output over the background with
/// the instance's values substituted for the features in `members`.
///
/// The empty coalition gives the base value and the full set gives the
/// model output on the instance itself.
pub fn coalition_value(
    model: &impl Predictor,
    instance: ArrayView1<f64>,
    background: &BackgroundSet,
    members: &[usize],
) -> f64 {
    check_widths(model, instance, background);
    for &j in members {
        assert!(j < instance.len(), "coalition member {j} out of range for d={}", instance.len());
    }
    let mut composed = background.data.clone();
    for &j in members {
        composed.column_mut(j).fill(instance[j]);
    }
    mean(&model.predict_batch(composed.view()))
}

/// Exact Shapley attribution by full coalition enumeration.
///
/// phi_i = sum over S not containing i of |S|! (d-|S|-1)! / d! times the
/// marginal v(S + i) - v(S). Feasible for d <= 15; the returned vector has
/// `instance_id` 0, which batch drivers overwrite.
pub fn shap_exact(
    model: &impl Predictor,
    instance: ArrayView1<f64>,
    background: &BackgroundSet,
) -> Result<ShapVector, XaiError> {
    check_widths(model, instance, background);
    let d = instance.len();
    if d > EXACT_DIM_LIMIT {
        return Err(XaiError::DimensionTooLarge { got: d, limit: EXACT_DIM_LIMIT });
    }

    let n_masks = 1usize << d;
    let mut values = vec![0.0; n_masks];
    let mut composed = Array2::zeros(background.data.raw_dim());
    for (mask, slot) in values.iter_mut().enumerate() {
        composed.assign(&background.data);
        for j in 0..d {
            if mask & (1 << j) != 0 {
                composed.column_mut(j).fill(instance[j]);
            }
        }
        *slot = mean(&model.predict_batch(composed.view()));
    }

    // factorial(15) < 2^53, so every weight numerator is exact in f64.
    let mut factorial = vec![1.0f64; d + 1];
    for k in 1..=d {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let weight: Vec<f64> =
        (0..d).map(|s| factorial[s] * factorial[d - s - 1] / factorial[d]).collect();

    let mut phi = vec![0.0; d];
    for (i, slot) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..n_masks {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                *slot += weight[s] * (values[mask | bit] - values[mask]);
            }
        }
    }

    Ok(ShapVector { instance_id: 0, phi, base_value: values[0], adjusted: false })
}

/// Permutation-sampling Shapley estimate.
///
/// Each permutation adds features to the coalition in a random order and
/// credits every feature with its marginal change in coalition value;
/// averaging over permutations estimates the exact attribution. The
/// telescoped sum of marginals drifts from f(x) - base by floating
/// residue and sampling never exactly cancels, so the residual is
/// redistributed across features in proportion to |phi| (equally when all
/// attributions are zero) and the vector is flagged `adjusted`.
pub fn shap_sampled(
    model: &impl Predictor,
    instance: ArrayView1<f64>,
    background: &BackgroundSet,
    n_permutations: usize,
    seed: u64,
) -> ShapVector {
    check_widths(model, instance, background);
    assert!(n_permutations >= 1, "n_permutations must be at least 1");
    let d = instance.len();

    let base = mean(&model.predict_batch(background.data.view()));
    let fx = {
        let row = instance.insert_axis(Axis(0));
        model.predict_batch(row)[0]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut phi = vec![0.0; d];
    let mut composed = Array2::zeros(background.data.raw_dim());
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        composed.assign(&background.data);
        let mut prev = base;
        for &j in &order {
            composed.column_mut(j).fill(instance[j]);
            let cur = mean(&model.predict_batch(composed.view()));
            phi[j] += cur - prev;
            prev = cur;
        }
    }
    for p in &mut phi {
        *p /= n_permutations as f64;
    }

    let residual = (fx - base) - phi.iter().sum::<f64>();
    let total_abs: f64 = phi.iter().map(|p| p.abs()).sum();
    if total_abs > 0.0 {
        for p in &mut phi {
            *p += residual * p.abs() / total_abs;
        }
    } else {
        for p in &mut phi {
            *p += residual / d as f64;
        }
    }

    ShapVector { instance_id: 0, phi, base_value: base, adjusted: true }
}

/// Explains every row of `instances`, in parallel, with per-instance seeds
/// derived from `seed` so the output does not depend on scheduling.
pub fn explain_set(
    model: &impl Predictor,
    instances: ArrayView2<f64>,
    background: &BackgroundSet,
    method: ShapMethod,
    seed: u64,
) -> Result<Vec<ShapVector>, XaiError> {
    if instances.nrows() == 0 {
        return Err(XaiError::NoInstances);
    }
    if instances.ncols() != model.input_dim() {
        return Err(XaiError::WidthMismatch {
            expected: model.input_dim(),
            got: instances.ncols(),
        });
    }
    if background.width() != model.input_dim() {
        return Err(XaiError::WidthMismatch {
            expected: model.input_dim(),
            got: background.width(),
        });
    }
    if let ShapMethod::Sampled { n_permutations: 0 } = method {
        return Err(XaiError::ZeroPermutations);
    }
    if let ShapMethod::Exact = method {
        if instances.ncols() > EXACT_DIM_LIMIT {
            return Err(XaiError::DimensionTooLarge {
                got: instances.ncols(),
                limit: EXACT_DIM_LIMIT,
            });
        }
    }

    let rows: Vec<(usize, ArrayView1<f64>)> =
        instances.rows().into_iter().enumerate().collect();
    rows.into_par_iter()
        .map(|(id, row)| {
            let mut vector = match method {
                ShapMethod::Exact => shap_exact(model, row, background)?,
                ShapMethod::Sampled { n_permutations } => {
                    shap_sampled(model, row, background, n_permutations, explain_seed(seed, id))
                }
            };
            vector.instance_id = id;
            Ok(vector)
        })
        .collect()
}
