//! Model persistence: a JSON manifest carrying widths, hyperparameters,
//! tensor order, and batch-norm running statistics, next to a flat
//! little-endian f64 weight file in manifest order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
use super::model::{HeadKind, ModelDims, ModelParams, LEAKY_SLOPE};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "risbeam-model";
pub const MODEL_VERSION: u16 = 1;
pub const WEIGHTS_MAGIC: &[u8; 6] = b"RBWGT\0";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorSpec {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BnStats {
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    initialized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Hyper {
    leaky_slope: f64,
    bn_momentum: f64,
    bn_eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelManifest {
    format: String,
    version: u16,
    dims: ModelDims,
    head: HeadKind,
    hyper: Hyper,
    tensors: Vec<TensorSpec>,
    bn1: BnStats,
    bn2: BnStats,
}

impl From<&BatchNorm> for BnStats {
    fn from(bn: &BatchNorm) -> BnStats {
        BnStats {
            running_mean: bn.running_mean.to_vec(),
            running_var: bn.running_var.to_vec(),
            initialized: bn.initialized,
        }
    }
}

/// Writes `model.json` and `weights.f64le` under `dir`.
pub fn save_model(params: &ModelParams, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = ModelManifest {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        dims: params.dims,
        head: params.head,
        hyper: Hyper {
            leaky_slope: LEAKY_SLOPE,
            bn_momentum: BN_MOMENTUM,
            bn_eps: BN_EPS,
        },
        tensors: params
            .tensor_specs()
            .into_iter()
            .map(|(name, shape)| TensorSpec {
                name: name.into(),
                shape,
            })
            .collect(),
        bn1: (&params.bn1).into(),
        bn2: (&params.bn2).into(),
    };
    std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&manifest)?)?;

    let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join("weights.f64le"))?);
    file.write_all(WEIGHTS_MAGIC)?;
    file.write_all(&MODEL_VERSION.to_le_bytes())?;
    for tensor in params.flat_tensors() {
        for v in tensor {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    file.flush()?;
    Ok(())
}

fn restore_bn(bn: &mut BatchNorm, stats: &BnStats, name: &str) -> Result<()> {
    if stats.running_mean.len() != bn.units() || stats.running_var.len() != bn.units() {
        return Err(Error::Inconsistent(format!(
            "{name} running stats hold {} / {} values, expected {}",
            stats.running_mean.len(),
            stats.running_var.len(),
            bn.units()
        )));
    }
    bn.running_mean = stats.running_mean.clone().into();
    bn.running_var = stats.running_var.clone().into();
    bn.initialized = stats.initialized;
    Ok(())
}

/// Loads a model saved by [`save_model`]; the round trip is exact.
pub fn load_model(dir: &Path) -> Result<ModelParams> {
    let manifest_path = dir.join("model.json");
    let manifest: ModelManifest =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    if manifest.format != MODEL_FORMAT {
        return Err(Error::Format {
            path: manifest_path.display().to_string(),
        });
    }
    if manifest.version != MODEL_VERSION {
        return Err(Error::Version {
            path: manifest_path.display().to_string(),
            found: manifest.version,
            expected: MODEL_VERSION,
        });
    }

    let mut params = ModelParams::init(manifest.dims, manifest.head, 0);
    let expected: Vec<TensorSpec> = params
        .tensor_specs()
        .into_iter()
        .map(|(name, shape)| TensorSpec {
            name: name.into(),
            shape,
        })
        .collect();
    if expected.len() != manifest.tensors.len()
        || expected
            .iter()
            .zip(&manifest.tensors)
            .any(|(a, b)| a.name != b.name || a.shape != b.shape)
    {
        return Err(Error::Inconsistent(
            "manifest tensor list does not match the declared dimensions".into(),
        ));
    }

    let weights_path = dir.join("weights.f64le");
    let mut file = std::io::BufReader::new(std::fs::File::open(&weights_path)?);
    let mut magic = [0u8; 6];
    file.read_exact(&mut magic).map_err(|_| Error::Format {
        path: weights_path.display().to_string(),
    })?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::Format {
            path: weights_path.display().to_string(),
        });
    }
    let mut version = [0u8; 2];
    file.read_exact(&mut version).map_err(|_| Error::Format {
        path: weights_path.display().to_string(),
    })?;
    let version = u16::from_le_bytes(version);
    if version != MODEL_VERSION {
        return Err(Error::Version {
            path: weights_path.display().to_string(),
            found: version,
            expected: MODEL_VERSION,
        });
    }

    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    let total: usize = params.flat_tensors().iter().map(|t| t.len()).sum();
    if payload.len() != total * 8 {
        return Err(Error::Truncated {
            path: weights_path.display().to_string(),
            expected: total * 8,
            found: payload.len(),
        });
    }
    let mut offset = 0usize;
    for tensor in params.flat_tensors_mut() {
        for v in tensor.iter_mut() {
            let bytes: [u8; 8] = payload[offset..offset + 8].try_into().expect("length checked");
            *v = f64::from_le_bytes(bytes);
            offset += 8;
        }
    }

    restore_bn(&mut params.bn1, &manifest.bn1, "bn1")?;
    restore_bn(&mut params.bn2, &manifest.bn2, "bn2")?;
    Ok(params)
}
