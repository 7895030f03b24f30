//! Checkpoint files.
//!
//! Layout: the magic line `TRANSTECH-CHECKPOINT\n`, a little-endian `u64`
//! header length, a JSON header, then every tensor listed in the header as
//! little-endian `f64` values in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ArchitectureSpec, EncoderParams, EpochLog, HeadParams, HeadSpec, ModelKind, Network, TrainConfig,
    TrainedModel,
};
use crate::encode::FeatureConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8] = b"TRANSTECH-CHECKPOINT\n";

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    kind: ModelKind,
    spec: ArchitectureSpec,
    heads: Vec<HeadSpec>,
    feature_config: FeatureConfig,
    feature_fingerprint: String,
    train_config: TrainConfig,
    best_epoch: usize,
    training_log: Vec<EpochLog>,
    tensors: Vec<TensorInfo>,
}

fn tensor_infos(net: &Network) -> Vec<TensorInfo> {
    let e = &net.encoder;
    let mut v = vec![
        TensorInfo {
            name: "encoder.w".into(),
            shape: vec![e.input_dim, e.hidden],
        },
        TensorInfo {
            name: "encoder.b".into(),
            shape: vec![e.hidden],
        },
    ];
    for (k, h) in net.heads.iter().enumerate() {
        v.push(TensorInfo {
            name: format!("head{k}.w"),
            shape: vec![h.hidden, h.arity],
        });
        v.push(TensorInfo {
            name: format!("head{k}.b"),
            shape: vec![h.arity],
        });
    }
    v
}

pub fn save_checkpoint(model: &TrainedModel, path: &Path) -> Result<()> {
    let header = Header {
        version: CHECKPOINT_VERSION,
        kind: model.kind,
        spec: model.spec,
        heads: model.heads.clone(),
        feature_config: model.feature_config,
        feature_fingerprint: model.feature_fingerprint.clone(),
        train_config: model.train_config,
        best_epoch: model.best_epoch,
        training_log: model.log.clone(),
        tensors: tensor_infos(&model.network),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut bytes = Vec::with_capacity(MAGIC.len() + 8 + json.len() + 8 * model.network.param_count());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for t in model.network.tensors() {
        for v in t {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn read_tensor(bytes: &mut &[u8], info: &TensorInfo, expected: &[usize]) -> Result<Vec<f64>> {
    if info.shape != expected {
        return Err(Error::Checkpoint(format!(
            "tensor {} has shape {:?}, expected {:?}",
            info.name, info.shape, expected
        )));
    }
    let n: usize = expected.iter().product();
    let raw = take(bytes, 8 * n)?;
    Ok(raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut bytes: &[u8] = &data;
    if take(&mut bytes, MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint(format!("{} is not a checkpoint", path.display())));
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().expect("8 bytes")) as usize;
    let raw_header = take(&mut bytes, len)?;
    let version = serde_json::from_slice::<serde_json::Value>(raw_header)
        .map_err(|e| Error::Checkpoint(e.to_string()))?
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Checkpoint("missing version".into()))?;
    if version != u64::from(CHECKPOINT_VERSION) {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let header: Header =
        serde_json::from_slice(raw_header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if header.feature_config.fingerprint() != header.feature_fingerprint {
        return Err(Error::Checkpoint("feature fingerprint does not match its config".into()));
    }
    let infos = &header.tensors;
    if infos.len() != 2 + 2 * header.heads.len() {
        return Err(Error::Checkpoint("tensor count does not match heads".into()));
    }
    let [d, h] = infos[0].shape[..] else {
        return Err(Error::Checkpoint("encoder.w must be a matrix".into()));
    };
    if d != header.feature_config.dim() {
        return Err(Error::Checkpoint(format!(
            "encoder input {d} does not match feature dimension {}",
            header.feature_config.dim()
        )));
    }
    let encoder = EncoderParams {
        input_dim: d,
        hidden: h,
        w: read_tensor(&mut bytes, &infos[0], &[d, h])?,
        b: read_tensor(&mut bytes, &infos[1], &[h])?,
    };
    let mut heads = Vec::new();
    for (k, spec) in header.heads.iter().enumerate() {
        let a = spec.labels.len();
        heads.push(HeadParams {
            hidden: h,
            arity: a,
            w: read_tensor(&mut bytes, &infos[2 + 2 * k], &[h, a])?,
            b: read_tensor(&mut bytes, &infos[3 + 2 * k], &[a])?,
        });
    }
    if !bytes.is_empty() {
        return Err(Error::Checkpoint("trailing bytes after tensors".into()));
    }
    Ok(TrainedModel {
        kind: header.kind,
        spec: header.spec,
        heads: header.heads,
        feature_config: header.feature_config,
        feature_fingerprint: header.feature_fingerprint,
        train_config: header.train_config,
        network: Network { encoder, heads },
        log: header.training_log,
        best_epoch: header.best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, EpochLog};

    fn model() -> TrainedModel {
        let fc = FeatureConfig {
            hash_dim: 4,
            ..Default::default()
        };
        let kind = ModelKind::A3Stage1;
        TrainedModel {
            kind,
            spec: ArchitectureSpec::new(Architecture::A3),
            heads: kind.heads(),
            feature_config: fc,
            feature_fingerprint: fc.fingerprint(),
            train_config: TrainConfig {
                hidden: 3,
                ..Default::default()
            },
            network: Network::init(fc.dim(), 3, &[3], 7),
            log: vec![EpochLog {
                epoch: 1,
                train_loss: 1.25,
                dev_accuracy: 0.5,
            }],
            best_epoch: 1,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = model();
        save_checkpoint(&m, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), m);
        let first = fs::read(&path).unwrap();
        save_checkpoint(&load_checkpoint(&path).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        fs::write(&path, b"nope").unwrap();
        assert!(load_checkpoint(&path).is_err());
        save_checkpoint(&model(), &path).unwrap();
        let mut data = fs::read(&path).unwrap();
        data.truncate(data.len() - 3);
        fs::write(&path, &data).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn rejects_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&model(), &path).unwrap();
        let data = fs::read(&path).unwrap();
        let needle = b"\"version\":1";
        let pos = data.windows(needle.len()).position(|w| w == needle).unwrap();
        let mut patched = data.clone();
        patched[pos + needle.len() - 1] = b'9';
        fs::write(&path, &patched).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("version 9"), "{err}");
    }
}
