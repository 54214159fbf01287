//! Lamport one-time signatures over λ-bit messages.
//!
//! The signing key is a 32-byte seed; each preimage is derived from it, so
//! `Sign(sigk, m)` is a deterministic function of `(sigk, m)`. That determinism
//! is what lets the signing map be applied coherently as an XOR oracle.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SecurityStatus;
use crate::bits::BitString;
use crate::encoding::{self, hash_parts, Digest};
use crate::qstate::{OracleDescriptor, XorOracle};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::FunctionalReferenceOnly;

/// Bytes per preimage and per image.
pub const CHUNK_BYTES: usize = 16;
pub const SIGN_ORACLE_KIND: &str = "sig-sign";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SigError {
    #[error("message has {actual} bits, key signs {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SigningKey {
    #[serde(with = "encoding::hex_digest")]
    pub seed: [u8; 32],
    pub msg_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VerificationKey {
    pub msg_bits: usize,
    /// `images[2i + b]` is the image of the preimage for bit value `b` at position `i`.
    #[serde(with = "encoding::hex_bytes")]
    pub images: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(#[serde(with = "encoding::hex_bytes")] pub Vec<u8>);

impl Signature {
    pub fn to_bits(&self) -> BitString {
        BitString::from_bytes(&self.0, self.0.len() * 8)
    }

    pub fn from_bits(bits: &BitString) -> Signature {
        Signature(bits.to_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigKeyPair {
    pub vk: VerificationKey,
    pub sigk: SigningKey,
}

impl SigKeyPair {
    pub fn sig_width(&self) -> usize {
        signature_width(self.sigk.msg_bits)
    }
}

/// Signature width in bits for `msg_bits`-bit messages.
pub fn signature_width(msg_bits: usize) -> usize {
    msg_bits * CHUNK_BYTES * 8
}

fn preimage(seed: &[u8; 32], i: usize, b: bool) -> [u8; CHUNK_BYTES] {
    let h = hash_parts("sig/preimage", &[seed, &(i as u64).to_le_bytes(), &[b as u8]]);
    h[..CHUNK_BYTES].try_into().unwrap()
}

fn image(pre: &[u8]) -> [u8; CHUNK_BYTES] {
    hash_parts("sig/image", &[pre])[..CHUNK_BYTES].try_into().unwrap()
}

pub fn sig_gen<R: Rng + ?Sized>(msg_bits: usize, rng: &mut R) -> SigKeyPair {
    let sigk = SigningKey { seed: rng.gen(), msg_bits };
    let mut images = Vec::with_capacity(2 * msg_bits * CHUNK_BYTES);
    for i in 0..msg_bits {
        for b in [false, true] {
            images.extend_from_slice(&image(&preimage(&sigk.seed, i, b)));
        }
    }
    SigKeyPair { vk: VerificationKey { msg_bits, images }, sigk }
}

pub fn sig_sign(sigk: &SigningKey, m: &BitString) -> Result<Signature, SigError> {
    if m.len() != sigk.msg_bits {
        return Err(SigError::LengthMismatch { expected: sigk.msg_bits, actual: m.len() });
    }
    Ok(Signature(m.iter().enumerate().flat_map(|(i, b)| preimage(&sigk.seed, i, b)).collect()))
}

pub fn sig_verify(vk: &VerificationKey, m: &BitString, sigma: &Signature) -> bool {
    if m.len() != vk.msg_bits
        || sigma.0.len() != vk.msg_bits * CHUNK_BYTES
        || vk.images.len() != 2 * vk.msg_bits * CHUNK_BYTES
    {
        return false;
    }
    m.iter().enumerate().all(|(i, b)| {
        let chunk = &sigma.0[i * CHUNK_BYTES..(i + 1) * CHUNK_BYTES];
        let slot = (2 * i + b as usize) * CHUNK_BYTES;
        image(chunk)[..] == vk.images[slot..slot + CHUNK_BYTES]
    })
}

/// The coherent signing map `|ν⟩|a⟩ → |ν⟩|a ⊕ Sign(sigk, ν)⟩`.
#[derive(Debug, Clone)]
pub struct SignOracle {
    sigk: SigningKey,
}

impl SignOracle {
    pub fn new(sigk: SigningKey) -> Arc<dyn XorOracle> {
        Arc::new(Self { sigk })
    }
}

impl XorOracle for SignOracle {
    fn input_width(&self) -> usize {
        self.sigk.msg_bits
    }

    fn output_width(&self) -> usize {
        signature_width(self.sigk.msg_bits)
    }

    fn eval(&self, input: &BitString) -> BitString {
        sig_sign(&self.sigk, input).expect("input width checked by the register").to_bits()
    }

    fn fingerprint(&self) -> Digest {
        let d = self.descriptor();
        hash_parts("qstate/oracle", &[d.kind.as_bytes(), &d.params])
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor { kind: SIGN_ORACLE_KIND.into(), params: encoding::canonical_bytes(&self.sigk) }
    }
}

/// Restores a [`SignOracle`] from its descriptor.
pub fn resolve_sign_oracle(d: &OracleDescriptor) -> Option<Arc<dyn XorOracle>> {
    if d.kind != SIGN_ORACLE_KIND {
        return None;
    }
    encoding::from_canonical_bytes::<SigningKey>(&d.params).ok().map(SignOracle::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_many() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let kp = sig_gen(32, &mut rng);
        assert_eq!(kp.sig_width(), 32 * 128);
        for _ in 0..1000 {
            let m = BitString::random(32, &mut rng);
            let s = sig_sign(&kp.sigk, &m).unwrap();
            assert!(sig_verify(&kp.vk, &m, &s));
        }
    }

    #[test]
    fn every_single_bit_flip_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let kp = sig_gen(16, &mut rng);
        let m = BitString::random(16, &mut rng);
        let s = sig_sign(&kp.sigk, &m).unwrap();
        for i in 0..16 {
            let mut m2 = m.clone();
            m2.flip(i);
            assert!(!sig_verify(&kp.vk, &m2, &s));
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = sig_gen(8, &mut rng);
        let m = BitString::random(8, &mut rng);
        assert_eq!(sig_sign(&kp.sigk, &m).unwrap(), sig_sign(&kp.sigk, &m).unwrap());
        assert!(sig_sign(&kp.sigk, &BitString::zeros(7)).is_err());
    }

    #[test]
    fn oracle_descriptor_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = sig_gen(4, &mut rng);
        let o = SignOracle::new(kp.sigk.clone());
        let back = resolve_sign_oracle(&o.descriptor()).unwrap();
        assert_eq!(back.fingerprint(), o.fingerprint());
        let m = BitString::from_u64(9, 4);
        assert_eq!(back.eval(&m), sig_sign(&kp.sigk, &m).unwrap().to_bits());
    }
}
