//! `.pqm` model files.
//!
//! Layout: the 4 magic bytes `PQM1`, a little-endian `u32` format version, a
//! little-endian `u64` header length, a UTF-8 JSON header, then every
//! parameter as a little-endian `f64` in layout order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{MicroCnn, TensorSpec};
use crate::error::{ClassifierError, Error};

pub const MAGIC: &[u8; 4] = b"PQM1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub input_shape: [usize; 2],
    pub labels: Vec<String>,
    pub layers: Vec<TensorSpec>,
    pub param_count: usize,
}

pub fn to_bytes(model: &MicroCnn) -> Vec<u8> {
    let (h, w) = model.input_shape();
    let header = Header {
        format: "pianoq-micro-cnn".into(),
        version: VERSION,
        input_shape: [h, w],
        labels: model.labels().to_vec(),
        layers: model.layout().specs().cloned().collect(),
        param_count: model.param_count(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<MicroCnn, ClassifierError> {
    let bad = |m: &str| ClassifierError::Checkpoint(m.to_string());
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing PQM1 magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let body = &bytes[16..];
    let hlen = usize::try_from(hlen)
        .ok()
        .filter(|&n| n <= body.len())
        .ok_or_else(|| bad("header length exceeds file"))?;
    let header: Header =
        serde_json::from_slice(&body[..hlen]).map_err(|e| bad(&format!("header: {e}")))?;
    let data = &body[hlen..];
    if data.len() != header.param_count * 8 {
        return Err(bad(&format!(
            "expected {} parameter bytes, found {}",
            header.param_count * 8,
            data.len()
        )));
    }
    let params = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let model = MicroCnn::from_parts(
        params,
        header.labels,
        (header.input_shape[0], header.input_shape[1]),
    )?;
    if !model.layout().specs().eq(header.layers.iter()) {
        return Err(bad("layer manifest does not match the micro-CNN layout"));
    }
    Ok(model)
}

pub fn save(model: &MicroCnn, path: impl AsRef<Path>) -> Result<(), Error> {
    std::fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MicroCnn, Error> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| {
        Error::Input(format!("cannot read model {}: {e}", path.display()))
    })?;
    Ok(from_bytes(&bytes)?)
}

/// First 16 hex digits of the SHA-256 of the serialized model.
pub fn model_id(model: &MicroCnn) -> String {
    let digest = Sha256::digest(to_bytes(model));
    hex::encode(&digest[..8])
}
