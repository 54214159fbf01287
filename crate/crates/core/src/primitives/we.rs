//! Witness encryption via a trusted evaluator.
//!
//! The ciphertext escrows the sealing key next to the statement; decryption
//! runs the relation check and only then unseals. The escrow is visible to
//! anyone who reads the struct, which is the point of calling it a model.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::oss::{oss_verify, OssCrs, OssPublicKey, OssSignature};
use super::SecurityStatus;
use crate::encoding::{self, expand, hash_parts, Digest};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::TrustedModel;

const TAG_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeError {
    #[error("witness does not satisfy the statement")]
    InvalidWitness,
    #[error("ciphertext integrity check failed")]
    Corrupted,
}

pub trait WeStatement {
    type Witness;

    fn check(&self, w: &Self::Witness) -> bool;
}

/// `∃σ : OSS.Verify(crs, pk, σ, message) = ⊤`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OssSignedStatement {
    pub crs: OssCrs,
    pub pk: OssPublicKey,
    pub message: bool,
}

impl WeStatement for OssSignedStatement {
    type Witness = OssSignature;

    fn check(&self, w: &OssSignature) -> bool {
        oss_verify(&self.crs, &self.pk, w, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeCiphertext<S> {
    pub statement: S,
    #[serde(with = "encoding::hex_digest")]
    escrow: Digest,
    #[serde(with = "encoding::hex_bytes")]
    sealed: Vec<u8>,
}

impl<S> WeCiphertext<S> {
    pub fn sealed_len(&self) -> usize {
        self.sealed.len()
    }

    /// Flips one bit of the sealed payload (fault injection).
    pub fn corrupt(&mut self, bit: usize) {
        if !self.sealed.is_empty() {
            let i = (bit / 8) % self.sealed.len();
            self.sealed[i] ^= 1 << (bit % 8);
        }
    }
}

pub fn we_encrypt<S: WeStatement, R: Rng + ?Sized>(statement: S, m: &[u8], rng: &mut R) -> WeCiphertext<S> {
    let escrow: Digest = rng.gen();
    let stream = expand("we/stream", &escrow, m.len());
    let mut sealed: Vec<u8> = m.iter().zip(stream).map(|(a, b)| a ^ b).collect();
    let tag = hash_parts("we/tag", &[&escrow, &sealed]);
    sealed.extend_from_slice(&tag[..TAG_BYTES]);
    WeCiphertext { statement, escrow, sealed }
}

/// `None` witness models an empty submission.
pub fn we_decrypt<S: WeStatement>(ct: &WeCiphertext<S>, w: Option<&S::Witness>) -> Result<Vec<u8>, WeError> {
    match w {
        Some(w) if ct.statement.check(w) => {}
        _ => return Err(WeError::InvalidWitness),
    }
    if ct.sealed.len() < TAG_BYTES {
        return Err(WeError::Corrupted);
    }
    let (body, tag) = ct.sealed.split_at(ct.sealed.len() - TAG_BYTES);
    if hash_parts("we/tag", &[&ct.escrow, body])[..TAG_BYTES] != *tag {
        return Err(WeError::Corrupted);
    }
    let stream = expand("we/stream", &ct.escrow, body.len());
    Ok(body.iter().zip(stream).map(|(a, b)| a ^ b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::oss::{oss_keygen, oss_setup, oss_sign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(seed: u64) -> (OssSignedStatement, crate::primitives::oss::OssKeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = oss_setup(&mut rng);
        let kp = oss_keygen(&crs, &mut rng);
        (OssSignedStatement { crs, pk: kp.pk.clone(), message: false }, kp, rng)
    }

    #[test]
    fn honest_sigma0_decrypts() {
        let (st, mut kp, mut rng) = setup(1);
        let ct = we_encrypt(st, b"payload", &mut rng);
        let s0 = oss_sign(&mut kp.sk, false).unwrap();
        assert_eq!(we_decrypt(&ct, Some(&s0)).unwrap(), b"payload");
    }

    #[test]
    fn sigma1_and_empty_rejected() {
        let (st, mut kp, mut rng) = setup(2);
        let ct = we_encrypt(st, b"payload", &mut rng);
        let s1 = oss_sign(&mut kp.sk, true).unwrap();
        assert_eq!(we_decrypt(&ct, Some(&s1)), Err(WeError::InvalidWitness));
        assert_eq!(we_decrypt(&ct, None), Err(WeError::InvalidWitness));
    }

    #[test]
    fn corruption_detected() {
        let (st, mut kp, mut rng) = setup(3);
        let mut ct = we_encrypt(st, b"payload", &mut rng);
        ct.corrupt(3);
        let s0 = oss_sign(&mut kp.sk, false).unwrap();
        assert_eq!(we_decrypt(&ct, Some(&s0)), Err(WeError::Corrupted));
    }
}
