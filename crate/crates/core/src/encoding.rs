//! Canonical encodings and domain-separated hashing.
//!
//! Canonical bytes are the `bincode` (v1) encoding of a value: fields in
//! declaration order, little-endian fixed-width integers, `u64` length prefixes.
//! JSON forms use hex for byte fields.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub type Digest = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("canonical decoding failed: {0}")]
    Decode(String),
}

pub fn canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    bincode::serialize(value).expect("in-memory bincode serialization cannot fail")
}

pub fn from_canonical_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, EncodingError> {
    bincode::deserialize(bytes).map_err(|e| EncodingError::Decode(e.to_string()))
}

/// SHA-256 over a domain tag and length-prefixed parts.
pub fn hash_parts(domain: &str, parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update((domain.len() as u64).to_le_bytes());
    h.update(domain.as_bytes());
    for part in parts {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().into()
}

pub fn digest_of<T: Serialize + ?Sized>(domain: &str, value: &T) -> Digest {
    hash_parts(domain, &[&canonical_bytes(value)])
}

/// Counter-mode SHA-256 expansion of `seed` to `len` bytes.
pub fn expand(domain: &str, seed: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter = 0u64;
    while out.len() < len {
        out.extend_from_slice(&hash_parts(domain, &[seed, &counter.to_le_bytes()]));
        counter += 1;
    }
    out.truncate(len);
    out
}

/// Serde adapter: hex strings in human-readable formats, raw bytes otherwise.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        if s.is_human_readable() {
            s.serialize_str(&hex::encode(bytes))
        } else {
            s.serialize_bytes(bytes)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        if d.is_human_readable() {
            let s = String::deserialize(d)?;
            hex::decode(s).map_err(serde::de::Error::custom)
        } else {
            Vec::<u8>::deserialize(d)
        }
    }
}

/// Same as [`hex_bytes`] for 32-byte digests.
pub mod hex_digest {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        super::hex_bytes::serialize(bytes, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let v = super::hex_bytes::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<u8>| serde::de::Error::invalid_length(v.len(), &"32 bytes"))
    }
}

/// Same as [`hex_bytes`] for a list of digests.
pub mod hex_digest_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[[u8; 32]], s: S) -> Result<S::Ok, S::Error> {
        if s.is_human_readable() {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for d in v {
                seq.serialize_element(&hex::encode(d))?;
            }
            seq.end()
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[u8; 32]>, D::Error> {
        if d.is_human_readable() {
            Vec::<String>::deserialize(d)?
                .into_iter()
                .map(|s| {
                    let bytes = hex::decode(s).map_err(serde::de::Error::custom)?;
                    bytes.try_into().map_err(|_| serde::de::Error::custom("expected 32-byte digest"))
                })
                .collect()
        } else {
            Vec::<[u8; 32]>::deserialize(d)
        }
    }
}
