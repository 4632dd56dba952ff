//! Model checkpoints: a `model.json` manifest plus `model.bin` with the raw
//! tensor data, little-endian `f64`, row-major, in manifest order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Float;

use super::ModelParams;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
    /// Byte offset into `model.bin`.
    offset: usize,
    /// Element count.
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    dtype: String,
    tensors: Vec<TensorEntry>,
}

/// Write `model.json` and `model.bin` into `dir`.
pub fn save_model<T: Float>(dir: &Path, model: &ModelParams<T>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let names = model.tensor_names();
    let shapes = model.tensor_shapes();
    let mut tensors = Vec::with_capacity(names.len());
    let mut blob: Vec<u8> = Vec::new();
    let mut idx = 0;
    model.for_each_tensor(|_, data| {
        let offset = blob.len();
        for &v in data {
            blob.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        tensors.push(TensorEntry {
            name: names[idx].clone(),
            shape: [shapes[idx].0, shapes[idx].1],
            offset,
            len: data.len(),
        });
        idx += 1;
    });
    let manifest = Manifest {
        dtype: "f64".into(),
        tensors,
    };
    std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&manifest)?)?;
    std::fs::write(dir.join("model.bin"), blob)?;
    Ok(())
}

/// Load a checkpoint into the shape of `skeleton`, validating the manifest
/// against the expected tensor names and shapes.
pub fn load_model<T: Float>(dir: &Path, skeleton: &ModelParams<T>) -> Result<ModelParams<T>> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json"))?)?;
    if manifest.dtype != "f64" {
        return Err(Error::CheckpointMismatch(format!(
            "dtype {} unsupported",
            manifest.dtype
        )));
    }
    let names = skeleton.tensor_names();
    let shapes = skeleton.tensor_shapes();
    if manifest.tensors.len() != names.len() {
        return Err(Error::CheckpointMismatch(format!(
            "{} tensors in manifest, model expects {}",
            manifest.tensors.len(),
            names.len()
        )));
    }
    for (entry, (name, shape)) in manifest.tensors.iter().zip(names.iter().zip(&shapes)) {
        if &entry.name != name {
            return Err(Error::CheckpointMismatch(format!(
                "tensor {} where {} was expected",
                entry.name, name
            )));
        }
        if entry.shape != [shape.0, shape.1] || entry.len != shape.0 * shape.1 {
            return Err(Error::CheckpointMismatch(format!(
                "tensor {} has shape {:?}, expected {:?}",
                entry.name,
                entry.shape,
                [shape.0, shape.1]
            )));
        }
    }
    let blob = std::fs::read(dir.join("model.bin"))?;
    let mut model = skeleton.clone();
    let mut idx = 0;
    let mut failure = None;
    model.for_each_tensor_mut(|name, data| {
        let entry = &manifest.tensors[idx];
        idx += 1;
        let start = entry.offset;
        let end = start + entry.len * 8;
        if end > blob.len() {
            failure.get_or_insert_with(|| format!("tensor {name} overruns model.bin"));
            return;
        }
        for (k, v) in data.iter_mut().enumerate() {
            let mut bytes = [0u8; 8];
            bytes.copy_from_slice(&blob[start + 8 * k..start + 8 * (k + 1)]);
            *v = T::from_f64_lossy(f64::from_le_bytes(bytes));
        }
    });
    match failure {
        Some(message) => Err(Error::CheckpointMismatch(message)),
        None => Ok(model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::train::{init_model, Architecture, TrainConfig};

    fn sample_model(seed: u64) -> ModelParams<f64> {
        let cfg = TrainConfig {
            hidden_dim: 5,
            layers: 2,
            arch: Architecture::FmpDiscrete,
            ..TrainConfig::default()
        };
        init_model(3, 2, 1, &cfg, &mut Rng::from_seed(seed))
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join(format!("fmp_ckpt_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let model = sample_model(3);
        save_model(&dir, &model).unwrap();
        let loaded = load_model(&dir, &model.zeros_like()).unwrap();
        let mut reference = Vec::new();
        model.for_each_tensor(|_, d| reference.push(d.to_vec()));
        let mut idx = 0;
        loaded.for_each_tensor(|_, d| {
            assert_eq!(d, reference[idx].as_slice());
            idx += 1;
        });
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = std::env::temp_dir().join(format!("fmp_ckpt_bad_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let model = sample_model(4);
        save_model(&dir, &model).unwrap();
        // A skeleton with a different hidden size must refuse the manifest.
        let other = {
            let cfg = TrainConfig {
                hidden_dim: 7,
                layers: 2,
                arch: Architecture::FmpDiscrete,
                ..TrainConfig::default()
            };
            init_model::<f64>(3, 2, 1, &cfg, &mut Rng::from_seed(5))
        };
        assert!(matches!(
            load_model(&dir, &other),
            Err(Error::CheckpointMismatch(_))
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
