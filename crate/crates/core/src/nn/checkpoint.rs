//! Model checkpoints.
//!
//! A checkpoint is a JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "architecture": { "input_dim": 4, "hidden_units": [8, 4] },
//!   "layers": [
//!     { "fan_in": 4, "fan_out": 8, "weights": [/* fan_in*fan_out values, row-major */], "bias": [/* fan_out values */] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Layers appear hidden-first with the single-unit output layer last, and
//! weights are flattened row by row (all outgoing weights of input 0, then
//! input 1, and so on). Values round-trip 64-bit floats exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{Architecture, Layer, ModelParams};
use super::NnError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerData {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    architecture: Architecture,
    layers: Vec<LayerData>,
}

/// Writes the model to `path`.
pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<(), NnError> {
    if !params.is_finite() {
        return Err(NnError::CheckpointCorrupt("model contains non-finite values".into()));
    }
    let layers = params
        .layers
        .iter()
        .map(|l| LayerData {
            fan_in: l.weights.nrows(),
            fan_out: l.weights.ncols(),
            weights: l.weights.iter().copied().collect(),
            bias: l.bias.to_vec(),
        })
        .collect();
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        architecture: params.architecture(),
        layers,
    };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json)?;
    Ok(())
}

/// Reads a model back, validating the version and every shape.
pub fn load_checkpoint(path: &Path) -> Result<ModelParams, NnError> {
    let text = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(NnError::CheckpointVersion {
            found: file.format_version,
            expected: CHECKPOINT_VERSION,
        });
    }
    file.architecture.validate()?;
    let dims = file.architecture.layer_dims();
    if dims.len() != file.layers.len() {
        return Err(NnError::CheckpointCorrupt(format!(
            "architecture implies {} layers, file has {}",
            dims.len(),
            file.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (index, (data, (fan_in, fan_out))) in file.layers.into_iter().zip(dims).enumerate() {
        if data.fan_in != fan_in || data.fan_out != fan_out {
            return Err(NnError::CheckpointCorrupt(format!(
                "layer {index} declares {}x{}, architecture implies {fan_in}x{fan_out}",
                data.fan_in, data.fan_out
            )));
        }
        if data.weights.len() != fan_in * fan_out {
            return Err(NnError::CheckpointCorrupt(format!(
                "layer {index} has {} weights, expected {}",
                data.weights.len(),
                fan_in * fan_out
            )));
        }
        if data.bias.len() != fan_out {
            return Err(NnError::CheckpointCorrupt(format!(
                "layer {index} has {} bias entries, expected {fan_out}",
                data.bias.len()
            )));
        }
        let weights = Array2::from_shape_vec((fan_in, fan_out), data.weights)
            .expect("length checked above");
        layers.push(Layer { weights, bias: Array1::from_vec(data.bias) });
    }
    let params = ModelParams { layers };
    if !params.is_finite() {
        return Err(NnError::CheckpointCorrupt("model contains non-finite values".into()));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_model;

    #[test]
    fn round_trip_is_bit_exact() {
        let arch = Architecture::new(5, vec![4, 3]).unwrap();
        let params = init_model(&arch, 321).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &params).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, params, "checkpoint must restore every bit");
    }

    #[test]
    fn rejects_unknown_version() {
        let arch = Architecture::new(2, vec![2]).unwrap();
        let params = init_model(&arch, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &params).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(NnError::CheckpointVersion { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn rejects_truncated_weights() {
        let arch = Architecture::new(2, vec![2]).unwrap();
        let params = init_model(&arch, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &params).unwrap();
        let mut file: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        file["layers"][0]["weights"].as_array_mut().unwrap().pop();
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(NnError::CheckpointCorrupt(_))));
    }

    #[test]
    fn rejects_missing_file() {
        assert!(matches!(
            load_checkpoint(Path::new("/nonexistent/model.json")),
            Err(NnError::CheckpointIo(_))
        ));
    }
}
