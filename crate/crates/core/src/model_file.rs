//! Two-part model file: a TOML manifest describing the architecture,
//! followed by a delimiter line and the raw little-endian `f32` weight blob.
//!
//! ```text
//! format_version = 1
//! ...manifest...
//! --- blob ---
//! <blob bytes>
//! ```
//!
//! Blob order: for each conv layer, weights `[out][in][tap]` then bias
//! `[out]`; then dense weights `[out][in]` then bias `[out]`. The manifest
//! records the blob length and its CRC-32.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{param_count, Activation, ConvLayerSpec, DenseSpec, ModelSpec, BYTES_PER_VALUE};
use crate::wav::write_atomic;

pub const FORMAT_VERSION: i64 = 1;
pub const BLOB_DELIMITER: &[u8] = b"--- blob ---\n";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: i64,
    window_samples: usize,
    sample_rate_hz: u32,
    class_labels: Vec<String>,
    blob_bytes: usize,
    blob_crc32: u32,
    conv: Vec<ConvEntry>,
    dense: DenseEntry,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConvEntry {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
struct DenseEntry {
    in_features: usize,
    out_features: usize,
}

fn blob_of(model: &ModelSpec) -> Vec<u8> {
    let mut blob = Vec::with_capacity(param_count(model).total * BYTES_PER_VALUE);
    let mut push = |vals: &[f32]| {
        for v in vals {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    };
    for layer in &model.conv_layers {
        push(&layer.weights);
        push(&layer.bias);
    }
    push(&model.dense.weights);
    push(&model.dense.bias);
    blob
}

/// Serializes a model to bytes.
pub fn encode_model(model: &ModelSpec) -> Result<Vec<u8>> {
    model.validate()?;
    let blob = blob_of(model);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        window_samples: model.window_samples,
        sample_rate_hz: model.sample_rate_hz,
        class_labels: model.class_labels.clone(),
        blob_bytes: blob.len(),
        blob_crc32: crc32fast::hash(&blob),
        conv: model
            .conv_layers
            .iter()
            .map(|l| ConvEntry {
                in_channels: l.in_channels,
                out_channels: l.out_channels,
                kernel: l.kernel,
                stride: l.stride,
                dilation: l.dilation,
                activation: l.activation,
            })
            .collect(),
        dense: DenseEntry {
            in_features: model.dense.in_features,
            out_features: model.dense.out_features,
        },
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
    let mut out = text.into_bytes();
    if !out.ends_with(b"\n") {
        out.push(b'\n');
    }
    out.extend_from_slice(BLOB_DELIMITER);
    out.extend_from_slice(&blob);
    Ok(out)
}

fn split_file(bytes: &[u8]) -> Result<(&str, &[u8])> {
    let at = bytes
        .windows(BLOB_DELIMITER.len())
        .position(|w| w == BLOB_DELIMITER)
        .filter(|&p| p == 0 || bytes[p - 1] == b'\n')
        .ok_or_else(|| Error::MalformedModel("blob delimiter not found".into()))?;
    let manifest = std::str::from_utf8(&bytes[..at])
        .map_err(|_| Error::MalformedModel("manifest is not UTF-8".into()))?;
    Ok((manifest, &bytes[at + BLOB_DELIMITER.len()..]))
}

/// Parses a model from bytes, validating version, blob length and checksum.
pub fn decode_model(bytes: &[u8]) -> Result<ModelSpec> {
    let (text, blob) = split_file(bytes)?;
    let raw: toml::Table = text
        .parse()
        .map_err(|e| Error::MalformedModel(format!("manifest: {e}")))?;
    match raw.get("format_version").and_then(toml::Value::as_integer) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::UnsupportedVersion(v)),
        None => {
            return Err(Error::MalformedModel(
                "manifest lacks format_version".into(),
            ))
        }
    }
    let manifest: Manifest =
        toml::from_str(text).map_err(|e| Error::MalformedModel(format!("manifest: {e}")))?;

    if blob.len() != manifest.blob_bytes {
        return Err(Error::MalformedModel(format!(
            "manifest declares {} blob bytes, file holds {}",
            manifest.blob_bytes,
            blob.len()
        )));
    }
    let crc = crc32fast::hash(blob);
    if crc != manifest.blob_crc32 {
        return Err(Error::CorruptModel {
            expected: manifest.blob_crc32,
            actual: crc,
        });
    }

    let mut values = blob
        .chunks_exact(BYTES_PER_VALUE)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut take = |n: usize, what: &str| -> Result<Vec<f32>> {
        let v: Vec<f32> = values.by_ref().take(n).collect();
        if v.len() != n {
            return Err(Error::MalformedModel(format!("blob too short for {what}")));
        }
        Ok(v)
    };

    let mut conv_layers = Vec::with_capacity(manifest.conv.len());
    for (i, e) in manifest.conv.iter().enumerate() {
        let weights = take(
            e.out_channels * e.in_channels * e.kernel,
            &format!("conv{i} weights"),
        )?;
        let bias = take(e.out_channels, &format!("conv{i} bias"))?;
        conv_layers.push(ConvLayerSpec {
            in_channels: e.in_channels,
            out_channels: e.out_channels,
            kernel: e.kernel,
            stride: e.stride,
            dilation: e.dilation,
            weights,
            bias,
            activation: e.activation,
        });
    }
    let d = &manifest.dense;
    let dense = DenseSpec {
        in_features: d.in_features,
        out_features: d.out_features,
        weights: take(d.in_features * d.out_features, "dense weights")?,
        bias: take(d.out_features, "dense bias")?,
    };
    if values.next().is_some() {
        return Err(Error::MalformedModel(
            "blob longer than the manifest architecture".into(),
        ));
    }
    let model = ModelSpec {
        conv_layers,
        dense,
        class_labels: manifest.class_labels,
        window_samples: manifest.window_samples,
        sample_rate_hz: manifest.sample_rate_hz,
    };
    model
        .validate()
        .map_err(|e| Error::MalformedModel(e.to_string()))?;
    Ok(model)
}

pub fn save_model(path: impl AsRef<Path>, model: &ModelSpec) -> Result<()> {
    write_atomic(path.as_ref(), &encode_model(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
