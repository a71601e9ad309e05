//! Named-tensor weights file, version 1.
//!
//! ```text
//! "FDDNTF01"            8-byte magic
//! u32 little-endian     header length in bytes
//! header                UTF-8 JSON object
//! payload               little-endian f32 values
//! ```
//!
//! The header maps each tensor name to `{dtype, shape, offset, length}`
//! (offset and length in bytes, offset relative to the payload start).
//! The reserved key `__metadata__` holds the model configuration. Tensors
//! are written in name order, packed without gaps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vit::{ModelConfig, ModelWeights, Tensor};

pub const MAGIC: &[u8; 8] = b"FDDNTF01";

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    dtype: String,
    shape: Vec<usize>,
    offset: usize,
    length: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    #[serde(rename = "__metadata__")]
    metadata: ModelConfig,
    #[serde(flatten)]
    tensors: BTreeMap<String, Entry>,
}

pub fn to_bytes(weights: &ModelWeights) -> Result<Vec<u8>> {
    let mut entries = BTreeMap::new();
    let mut payload = Vec::new();
    for (name, t) in &weights.tensors {
        let offset = payload.len();
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        entries.insert(
            name.clone(),
            Entry {
                dtype: "f32".into(),
                shape: t.shape.clone(),
                offset,
                length: payload.len() - offset,
            },
        );
    }
    let header = serde_json::to_vec(&Header {
        metadata: weights.config,
        tensors: entries,
    })?;
    let mut out = Vec::with_capacity(12 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelWeights> {
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "NTF preamble",
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Malformed("bad NTF magic".into()));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_start = 12usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Malformed(format!("NTF header length {header_len} exceeds file")))?;
    let header: Header = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| Error::Malformed(format!("NTF header: {e}")))?;
    let payload = &bytes[payload_start..];

    let mut extents: Vec<(usize, usize, &str)> = Vec::with_capacity(header.tensors.len());
    let mut tensors = BTreeMap::new();
    for (name, e) in &header.tensors {
        if e.dtype != "f32" {
            return Err(Error::Unsupported(format!(
                "tensor `{name}` dtype {}",
                e.dtype
            )));
        }
        let expected = e
            .shape
            .iter()
            .try_fold(4usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Malformed(format!("tensor `{name}` shape overflows")))?;
        if e.length != expected {
            return Err(Error::Malformed(format!(
                "tensor `{name}` length {} does not match shape {:?}",
                e.length, e.shape
            )));
        }
        let end = e
            .offset
            .checked_add(e.length)
            .filter(|&end| end <= payload.len())
            .ok_or_else(|| {
                Error::Malformed(format!(
                    "tensor `{name}` extent {}+{} beyond payload of {} bytes",
                    e.offset,
                    e.length,
                    payload.len()
                ))
            })?;
        extents.push((e.offset, end, name));
        let data = payload[e.offset..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.insert(name.clone(), Tensor::new(e.shape.clone(), data)?);
    }
    extents.sort();
    for pair in extents.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::Malformed(format!(
                "tensors `{}` and `{}` overlap",
                pair[0].2, pair[1].2
            )));
        }
    }
    let used_end = extents.last().map_or(0, |e| e.1);
    if used_end != payload.len() {
        return Err(Error::Malformed(format!(
            "payload is {} bytes but tensors end at {used_end}",
            payload.len()
        )));
    }
    ModelWeights::new(header.metadata, tensors)
}

pub fn save(weights: &ModelWeights, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(weights)?).map_err(|e| Error::from(e).in_file(path))
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelWeights> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    from_bytes(&bytes).map_err(|e| e.in_file(path))
}
