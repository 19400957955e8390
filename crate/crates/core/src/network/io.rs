//! Model directory: `manifest.json` (config, hyperparameters, tensor table)
//! plus `weights.bin` (little-endian f32, tensors concatenated in manifest
//! order).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::AdamConfig;
use super::config::{NetworkConfig, BN_EPS, BN_MOMENTUM};
use super::loss::BCE_CLAMP;
use super::model::Network;
use super::params::{NetworkParams, RunningStats};
use super::tensor::Tensor;
use crate::{Error, Real, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub adam: AdamConfig,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub bce_clamp: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            bn_momentum: BN_MOMENTUM,
            bn_eps: BN_EPS,
            bce_clamp: BCE_CLAMP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the weights blob.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub config: NetworkConfig,
    pub hyperparameters: Hyperparameters,
    pub tensors: Vec<TensorEntry>,
    pub weights_bytes: usize,
    /// Free-form provenance (e.g. the training command's config echo).
    #[serde(default)]
    pub extra: serde_json::Value,
}

fn all_tensors<T: Real>(params: &NetworkParams<T>) -> Vec<(String, Vec<usize>, Vec<T>)> {
    let mut out: Vec<_> = params
        .names
        .iter()
        .zip(&params.tensors)
        .map(|(n, t)| (n.clone(), t.shape().to_vec(), t.data().to_vec()))
        .collect();
    for (j, r) in params.running.iter().enumerate() {
        out.push((format!("bn{j}.running_mean"), vec![r.mean.len()], r.mean.clone()));
        out.push((format!("bn{j}.running_var"), vec![r.var.len()], r.var.clone()));
    }
    out
}

pub fn save_model<T: Real>(
    net: &Network<T>,
    hyper: &Hyperparameters,
    extra: serde_json::Value,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut blob = Vec::new();
    let mut entries = Vec::new();
    for (name, shape, data) in all_tensors(&net.params) {
        entries.push(TensorEntry {
            name,
            shape,
            offset: blob.len(),
        });
        for x in data {
            blob.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
        }
    }
    let manifest = ModelManifest {
        format_version: FORMAT_VERSION,
        config: net.config().clone(),
        hyperparameters: hyper.clone(),
        tensors: entries,
        weights_bytes: blob.len(),
        extra,
    };
    let weights = dir.join(WEIGHTS_FILE);
    fs::write(&weights, &blob).map_err(|e| Error::io(&weights, e))?;
    let mpath = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest)?;
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<ModelManifest> {
    let mpath = dir.as_ref().join(MANIFEST_FILE);
    let bytes = fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: ModelManifest = serde_json::from_slice(&bytes)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(manifest)
}

/// Loads a model, validating every declared shape against the config.
pub fn load_model<T: Real>(dir: impl AsRef<Path>) -> Result<(Network<T>, ModelManifest)> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    let wpath = dir.join(WEIGHTS_FILE);
    let blob = fs::read(&wpath).map_err(|e| Error::io(&wpath, e))?;
    let plan = manifest.config.plan()?;

    let mut expected: Vec<(String, Vec<usize>)> =
        plan.tensors.iter().map(|s| (s.name.clone(), s.shape.clone())).collect();
    for (j, &(_, _, ch)) in plan.bn_slots.iter().enumerate() {
        expected.push((format!("bn{j}.running_mean"), vec![ch]));
        expected.push((format!("bn{j}.running_var"), vec![ch]));
    }
    if expected.len() != manifest.tensors.len() {
        return Err(Error::ShapeMismatch(format!(
            "manifest lists {} tensors, config needs {}",
            manifest.tensors.len(),
            expected.len()
        )));
    }
    let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>() * 4).sum();
    if manifest.weights_bytes != total || blob.len() != total {
        return Err(Error::TruncatedWeights {
            expected: total,
            found: blob.len(),
        });
    }
    let mut offset = 0;
    let mut data = Vec::with_capacity(expected.len());
    for ((name, shape), entry) in expected.iter().zip(&manifest.tensors) {
        if &entry.name != name || &entry.shape != shape || entry.offset != offset {
            return Err(Error::ShapeMismatch(format!(
                "tensor {}: manifest declares {:?} at byte {}, config needs {name} {shape:?} at byte {offset}",
                entry.name, entry.shape, entry.offset
            )));
        }
        let n: usize = shape.iter().product();
        let vals: Vec<T> = blob[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|b| T::from_f64(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
            .collect();
        offset += 4 * n;
        data.push((name.clone(), shape.clone(), vals));
    }
    let n_train = plan.tensors.len();
    let mut it = data.into_iter();
    let mut names = Vec::new();
    let mut tensors = Vec::new();
    for _ in 0..n_train {
        let (name, shape, vals) = it.next().expect("counted above");
        names.push(name);
        tensors.push(Tensor::from_vec(&shape, vals)?);
    }
    let mut running = Vec::new();
    while let (Some((_, _, mean)), Some((_, _, var))) = (it.next(), it.next()) {
        running.push(RunningStats { mean, var });
    }
    let params = NetworkParams {
        names,
        tensors,
        running,
    };
    if !params.is_finite() {
        return Err(Error::InvalidArgument("model contains non-finite weights".into()));
    }
    Ok((Network::from_params(manifest.config.clone(), params)?, manifest))
}

/// SHA-256 over the manifest and weights files, hex encoded.
pub fn model_hash(dir: impl AsRef<Path>) -> Result<String> {
    let dir = dir.as_ref();
    let mut h = Sha256::new();
    for f in [MANIFEST_FILE, WEIGHTS_FILE] {
        let p = dir.join(f);
        h.update(fs::read(&p).map_err(|e| Error::io(&p, e))?);
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut net = Network::<f32>::new(NetworkConfig::toy(), 11).unwrap();
        net.params.running[1].mean[3] = 0.123;
        net.params.running[2].var[0] = 4.5;
        save_model(&net, &Hyperparameters::default(), serde_json::json!({"note": "x"}), dir.path()).unwrap();
        let (back, manifest) = load_model::<f32>(dir.path()).unwrap();
        assert_eq!(back.params, net.params);
        assert_eq!(back.config(), net.config());
        assert_eq!(manifest.hyperparameters.adam.lr, 0.0002);
        let json = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(json.contains("\"lr\": 0.0002"));
        assert!(json.contains("bn_conv_relu_pool_dropout"));
    }

    #[test]
    fn corrupted_length_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::<f32>::new(NetworkConfig::toy(), 1).unwrap();
        save_model(&net, &Hyperparameters::default(), serde_json::Value::Null, dir.path()).unwrap();
        let w = dir.path().join(WEIGHTS_FILE);
        let mut blob = fs::read(&w).unwrap();
        blob.truncate(blob.len() - 10);
        fs::write(&w, blob).unwrap();
        assert!(matches!(load_model::<f32>(dir.path()), Err(Error::TruncatedWeights { .. })));
    }

    #[test]
    fn version_and_shape_mismatches_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::<f32>::new(NetworkConfig::toy(), 1).unwrap();
        save_model(&net, &Hyperparameters::default(), serde_json::Value::Null, dir.path()).unwrap();
        let mpath = dir.path().join(MANIFEST_FILE);
        let original = fs::read_to_string(&mpath).unwrap();

        let mut m: serde_json::Value = serde_json::from_str(&original).unwrap();
        m["format_version"] = 99.into();
        fs::write(&mpath, m.to_string()).unwrap();
        assert!(matches!(load_model::<f32>(dir.path()), Err(Error::VersionMismatch { found: 99, .. })));

        let mut m: serde_json::Value = serde_json::from_str(&original).unwrap();
        m["tensors"][2]["shape"] = serde_json::json!([64, 1, 63]);
        fs::write(&mpath, m.to_string()).unwrap();
        assert!(matches!(load_model::<f32>(dir.path()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn hash_changes_with_weights() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::<f32>::new(NetworkConfig::toy(), 1).unwrap();
        save_model(&net, &Hyperparameters::default(), serde_json::Value::Null, dir.path()).unwrap();
        let h1 = model_hash(dir.path()).unwrap();
        assert_eq!(h1.len(), 64);
        let net2 = Network::<f32>::new(NetworkConfig::toy(), 2).unwrap();
        save_model(&net2, &Hyperparameters::default(), serde_json::Value::Null, dir.path()).unwrap();
        assert_ne!(h1, model_hash(dir.path()).unwrap());
    }
}
