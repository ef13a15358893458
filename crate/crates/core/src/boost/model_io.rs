//! Versioned JSON model files.
//!
//! Floats are written with the shortest representation that round-trips and
//! read back with exact parsing, so `load(save(e)) == e` bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HyperParams, Stump, StumpEnsemble};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StumpRecord {
    feature: usize,
    name: String,
    threshold: f64,
    left: f64,
    right: f64,
    gain: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    feature_names: Vec<String>,
    hyperparams: HyperParams,
    base_margin: f64,
    decision_threshold: f64,
    stumps: Vec<StumpRecord>,
}

pub fn model_to_json(ensemble: &StumpEnsemble) -> Result<String> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        feature_names: ensemble.feature_names.clone(),
        hyperparams: ensemble.hyperparams.clone(),
        base_margin: ensemble.base_margin,
        decision_threshold: ensemble.decision_threshold,
        stumps: ensemble
            .stumps
            .iter()
            .map(|s| StumpRecord {
                feature: s.feature_index,
                name: ensemble.feature_names[s.feature_index].clone(),
                threshold: s.split_threshold,
                left: s.left_value,
                right: s.right_value,
                gain: s.gain,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str) -> Result<StumpEnsemble> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::UnsupportedModelVersion {
            found: version.min(u64::from(u32::MAX)) as u32,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;

    let n_features = file.feature_names.len();
    let mut stumps = Vec::with_capacity(file.stumps.len());
    for (i, s) in file.stumps.into_iter().enumerate() {
        if s.feature >= n_features {
            return Err(Error::CorruptModel(format!(
                "stump {i}: feature {} out of range",
                s.feature
            )));
        }
        if s.name != file.feature_names[s.feature] {
            return Err(Error::CorruptModel(format!(
                "stump {i}: name `{}` does not match feature",
                s.name
            )));
        }
        stumps.push(Stump {
            feature_index: s.feature,
            split_threshold: s.threshold,
            left_value: s.left,
            right_value: s.right,
            gain: s.gain,
        });
    }
    Ok(StumpEnsemble {
        feature_names: file.feature_names,
        hyperparams: file.hyperparams,
        base_margin: file.base_margin,
        decision_threshold: file.decision_threshold,
        stumps,
    })
}

pub fn save_model(ensemble: &StumpEnsemble, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(ensemble)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<StumpEnsemble> {
    model_from_json(&fs::read_to_string(path)?)
}
