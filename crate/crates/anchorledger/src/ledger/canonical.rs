//! Deterministic JSON canonicalization used for all on-chain hashing.
//!
//! Canonical form:
//! - object keys sorted lexicographically by code point
//! - no insignificant whitespace
//! - integers in base-10, no leading zeros or plus sign
//! - strings minimally escaped
//!
//! Ledger values are built from integers, booleans, strings, arrays and
//! objects only. Floats and nulls have no canonical form here and are
//! rejected so the same bytes hash the same everywhere.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("unsupported value kind in canonical encoding: {0}")]
    Unsupported(&'static str),
}

/// Encode a value as canonical JSON bytes.
pub fn canonical_encode<T: Serialize>(value: &T) -> Result<Vec<u8>, EncodeError> {
    let value = serde_json::to_value(value)?;
    let canonical = canonicalize(value)?;
    Ok(serde_json::to_vec(&canonical).expect("canonical value serializes"))
}

/// Encode a value as a canonical JSON string.
pub fn canonical_encode_string<T: Serialize>(value: &T) -> Result<String, EncodeError> {
    let bytes = canonical_encode(value)?;
    Ok(String::from_utf8(bytes).expect("canonical JSON is UTF-8"))
}

fn canonicalize(value: Value) -> Result<Value, EncodeError> {
    match value {
        Value::Null => Err(EncodeError::Unsupported("null")),
        Value::Number(n) if n.is_f64() => Err(EncodeError::Unsupported("non-integer number")),
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::with_capacity(entries.len());
            for (key, inner) in entries {
                sorted.insert(key, canonicalize(inner)?);
            }
            Ok(Value::Object(sorted))
        }
        Value::Array(items) => Ok(Value::Array(
            items
                .into_iter()
                .map(canonicalize)
                .collect::<Result<_, _>>()?,
        )),
        other => Ok(other),
    }
}
