//! One-shot signatures modeled as a consumable token.
//!
//! The secret key holds one preimage per message bit. Signing reveals the
//! preimage for the chosen bit and erases the other, so the key can sign at most
//! one message. Copying the serialized key defeats this; the model covers
//! in-process use only.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SecurityStatus;
use crate::encoding::{self, hash_parts, Digest};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::TrustedModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OssError {
    #[error("one-shot key already signed {signed}; cannot sign {requested}")]
    OneShotConsumed { signed: bool, requested: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OssCrs(#[serde(with = "encoding::hex_digest")] pub Digest);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OssPublicKey {
    #[serde(with = "encoding::hex_digest")]
    pub image0: Digest,
    #[serde(with = "encoding::hex_digest")]
    pub image1: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OssSignature(#[serde(with = "encoding::hex_digest")] pub Digest);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum OssSecretKey {
    Unused {
        #[serde(with = "encoding::hex_digest")]
        pre0: Digest,
        #[serde(with = "encoding::hex_digest")]
        pre1: Digest,
    },
    Consumed {
        message: bool,
        signature: OssSignature,
    },
}

impl OssSecretKey {
    pub fn is_consumed(&self) -> bool {
        matches!(self, OssSecretKey::Consumed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OssKeyPair {
    pub pk: OssPublicKey,
    pub sk: OssSecretKey,
}

fn image(crs: &OssCrs, pre: &Digest) -> Digest {
    hash_parts("oss/image", &[&crs.0, pre])
}

pub fn oss_setup<R: Rng + ?Sized>(rng: &mut R) -> OssCrs {
    OssCrs(rng.gen())
}

pub fn oss_keygen<R: Rng + ?Sized>(crs: &OssCrs, rng: &mut R) -> OssKeyPair {
    let pre0: Digest = rng.gen();
    let pre1: Digest = rng.gen();
    OssKeyPair {
        pk: OssPublicKey { image0: image(crs, &pre0), image1: image(crs, &pre1) },
        sk: OssSecretKey::Unused { pre0, pre1 },
    }
}

/// Signs `m`, consuming the key. Re-signing the same message returns the recorded signature.
pub fn oss_sign(sk: &mut OssSecretKey, m: bool) -> Result<OssSignature, OssError> {
    match sk {
        OssSecretKey::Unused { pre0, pre1 } => {
            let signature = OssSignature(if m { *pre1 } else { *pre0 });
            *sk = OssSecretKey::Consumed { message: m, signature: signature.clone() };
            Ok(signature)
        }
        OssSecretKey::Consumed { message, signature } if *message == m => Ok(signature.clone()),
        OssSecretKey::Consumed { message, .. } => {
            Err(OssError::OneShotConsumed { signed: *message, requested: m })
        }
    }
}

pub fn oss_verify(crs: &OssCrs, pk: &OssPublicKey, sigma: &OssSignature, m: bool) -> bool {
    let expected = if m { &pk.image1 } else { &pk.image0 };
    image(crs, &sigma.0) == *expected
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let crs = oss_setup(&mut rng);
        let mut kp = oss_keygen(&crs, &mut rng);
        let s = oss_sign(&mut kp.sk, true).unwrap();
        assert!(oss_verify(&crs, &kp.pk, &s, true));
        assert!(!oss_verify(&crs, &kp.pk, &s, false));
    }

    #[test]
    fn at_most_one_message() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let crs = oss_setup(&mut rng);
        let mut kp = oss_keygen(&crs, &mut rng);
        let s0 = oss_sign(&mut kp.sk, false).unwrap();
        assert_eq!(
            oss_sign(&mut kp.sk, true).unwrap_err(),
            OssError::OneShotConsumed { signed: false, requested: true }
        );
        assert_eq!(oss_sign(&mut kp.sk, false).unwrap(), s0);
        assert!(kp.sk.is_consumed());
    }

    #[test]
    fn other_crs_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let crs = oss_setup(&mut rng);
        let crs2 = oss_setup(&mut rng);
        let mut kp = oss_keygen(&crs, &mut rng);
        let s = oss_sign(&mut kp.sk, false).unwrap();
        assert!(!oss_verify(&crs2, &kp.pk, &s, false));
    }
}
