//! Canonical JSON form shared by the certificates.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

/// `{kind, inputs, value, blocks, verified}` with integers as decimal
/// strings and blocks as sorted index arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub kind: String,
    pub inputs: serde_json::Value,
    pub value: String,
    pub blocks: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub verified: bool,
}

pub fn decimal_strings(values: &[BigUint]) -> Vec<String> {
    values.iter().map(ToString::to_string).collect()
}

/// Parses decimal strings back into integers.
pub fn parse_decimals(values: &[String]) -> Result<Vec<BigUint>, String> {
    values
        .iter()
        .map(|s| {
            s.parse::<BigUint>()
                .map_err(|e| format!("bad decimal {s:?}: {e}"))
        })
        .collect()
}

/// Serde adapter storing a `BigUint` as a decimal string.
pub mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}
