//! JSON model file.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "feature_spec": { "kind": "gaussian_rff", "sigma": 1.0, "dim": 3 },
//!   "master_seed": 42,
//!   "lambda": 0.0,
//!   "scale": 1.0,
//!   "coefficients": [0.125, -0.0625]
//! }
//! ```
//!
//! Doubles are written in shortest round-trip form, so load(save(m)) is bit-exact.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::features::{FeatureMap, FeatureMapSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileRef<'a> {
    format_version: u32,
    feature_spec: &'a FeatureMapSpec,
    master_seed: u64,
    lambda: f64,
    scale: f64,
    coefficients: &'a [f64],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOwned {
    format_version: u32,
    feature_spec: FeatureMapSpec,
    master_seed: u64,
    lambda: f64,
    scale: f64,
    coefficients: Vec<f64>,
}

pub(super) fn serialize(model: &Model) -> Vec<u8> {
    let file = FileRef {
        format_version: FORMAT_VERSION,
        feature_spec: model.map.spec(),
        master_seed: model.master_seed,
        lambda: model.lambda,
        scale: model.scale,
        coefficients: &model.coefficients,
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("model is always serializable");
    out.push(b'\n');
    out
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (n, chunk) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        if n + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += chunk.len();
    }
    bytes.len()
}

pub(super) fn deserialize(bytes: &[u8]) -> Result<Model> {
    let file: FileOwned = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let invalid = |message: String| Error::Parse {
        offset: bytes.len(),
        message,
    };
    if file.format_version != FORMAT_VERSION {
        return Err(invalid(format!(
            "unsupported format_version {}, expected {FORMAT_VERSION}",
            file.format_version
        )));
    }
    if !(file.lambda >= 0.0) || !file.lambda.is_finite() {
        return Err(invalid(format!("lambda must be non-negative, got {}", file.lambda)));
    }
    if !(file.scale > 0.0) || !file.scale.is_finite() {
        return Err(invalid(format!("scale must be positive, got {}", file.scale)));
    }
    if let Some(k) = file.coefficients.iter().position(|b| !b.is_finite()) {
        return Err(invalid(format!("coefficient {k} is not finite")));
    }
    let map = FeatureMap::new(file.feature_spec).map_err(|e| invalid(e.to_string()))?;
    Ok(Model::from_parts(
        Arc::new(map),
        file.master_seed,
        file.lambda,
        file.scale,
        file.coefficients,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_follow_lines() {
        let text = b"ab\ncde\nf";
        assert_eq!(byte_offset(text, 1, 1), 0);
        assert_eq!(byte_offset(text, 2, 2), 4);
        assert_eq!(byte_offset(text, 3, 1), 7);
    }
}
