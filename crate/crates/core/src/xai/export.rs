//! Aggregation of per-instance attributions and plot-ready exports.

use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::shap::ShapVector;
use super::XaiError;

/// Attribution vectors for an explanation set, plus the per-feature
/// min-max-normalized raw values used as the beeswarm color axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    pub vectors: Vec<ShapVector>,
    /// Same shape as the explained instances; column j holds the raw value
    /// rescaled to [0, 1], or 0.5 throughout when the feature is constant.
    pub normalized_values: Array2<f64>,
}

impl ShapMatrix {
    /// Assembles a matrix from the explained instances and their vectors.
    /// `instances` must be the rows passed to the explainer, in order.
    pub fn new(
        feature_names: Vec<String>,
        vectors: Vec<ShapVector>,
        instances: ArrayView2<f64>,
    ) -> Result<Self, XaiError> {
        let d = instances.ncols();
        if feature_names.len() != d {
            return Err(XaiError::NameCountMismatch { names: feature_names.len(), width: d });
        }
        if vectors.is_empty() {
            return Err(XaiError::NoInstances);
        }
        if vectors.len() != instances.nrows() {
            return Err(XaiError::WidthMismatch { expected: instances.nrows(), got: vectors.len() });
        }
        for v in &vectors {
            if v.phi.len() != d {
                return Err(XaiError::WidthMismatch { expected: d, got: v.phi.len() });
            }
        }

        let mut normalized = Array2::zeros(instances.raw_dim());
        for j in 0..d {
            let col = instances.column(j);
            let lo = col.fold(f64::INFINITY, |m, &v| m.min(v));
            let hi = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut out = normalized.column_mut(j);
            if hi > lo {
                for (dst, &v) in out.iter_mut().zip(col.iter()) {
                    *dst = (v - lo) / (hi - lo);
                }
            } else {
                out.fill(0.5);
            }
        }
        Ok(ShapMatrix { feature_names, vectors, normalized_values: normalized })
    }

    pub fn n_instances(&self) -> usize {
        self.vectors.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Features ranked by mean absolute attribution, descending; ties broken
/// alphabetically by feature name.
pub fn global_importance(shap: &ShapMatrix) -> Vec<(String, f64)> {
    let d = shap.n_features();
    let n = shap.n_instances() as f64;
    let mut ranked: Vec<(String, f64)> = (0..d)
        .map(|j| {
            let mean_abs = shap.vectors.iter().map(|v| v.phi[j].abs()).sum::<f64>() / n;
            (shap.feature_names[j].clone(), mean_abs)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("attributions are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

/// One beeswarm point: a feature's attribution on one instance, with the
/// min-max-normalized raw value for coloring.
#[derive(Debug, Clone, PartialEq)]
pub struct BeeswarmRow {
    pub feature: String,
    pub shap_value: f64,
    pub normalized_value: f64,
    pub instance_id: usize,
}

/// One bar-plot entry: a feature's mean absolute attribution and its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct BarRow {
    pub feature: String,
    pub mean_abs_shap: f64,
    pub rank: usize,
}

/// Flattens the matrix to one row per (feature, instance), features ordered
/// by global importance and instances in explanation order. Signs are kept
/// verbatim.
pub fn beeswarm_export(shap: &ShapMatrix) -> Vec<BeeswarmRow> {
    let column_of: std::collections::HashMap<&str, usize> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.as_str(), j))
        .collect();
    let mut rows = Vec::with_capacity(shap.n_features() * shap.n_instances());
    for (name, _) in global_importance(shap) {
        let j = column_of[name.as_str()];
        for (i, vector) in shap.vectors.iter().enumerate() {
            rows.push(BeeswarmRow {
                feature: name.clone(),
                shap_value: vector.phi[j],
                normalized_value: shap.normalized_values[[i, j]],
                instance_id: vector.instance_id,
            });
        }
    }
    rows
}

/// Bar-plot data in global-importance order, rank starting at 1.
pub fn bar_export(shap: &ShapMatrix) -> Vec<BarRow> {
    global_importance(shap)
        .into_iter()
        .enumerate()
        .map(|(idx, (feature, mean_abs_shap))| BarRow { feature, mean_abs_shap, rank: idx + 1 })
        .collect()
}

pub fn write_beeswarm_csv(path: &Path, shap: &ShapMatrix) -> Result<(), XaiError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "shap_value", "normalized_value", "instance_id"])?;
    for row in beeswarm_export(shap) {
        w.write_record([
            row.feature,
            row.shap_value.to_string(),
            row.normalized_value.to_string(),
            row.instance_id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bar_csv(path: &Path, shap: &ShapMatrix) -> Result<(), XaiError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "mean_abs_shap", "rank"])?;
    for row in bar_export(shap) {
        w.write_record([row.feature, row.mean_abs_shap.to_string(), row.rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
