//! Hashed ElGamal over the multiplicative group modulo the Mersenne prime 2^61 − 1.
//!
//! Toy parameters: the group is far too small for any security. Encryption is a
//! deterministic function of `(pk, m, r)`; a 16-byte tag makes wrong-key
//! decryption fail instead of returning garbage.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SecurityStatus;
use crate::encoding::{expand, hash_parts};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::FunctionalReferenceOnly;

pub const MODULUS: u64 = (1 << 61) - 1;
pub const GENERATOR: u64 = 3;
pub const MAX_MESSAGE_BYTES: usize = 1 << 20;
const TAG_BYTES: usize = 16;
const HEADER_BYTES: usize = 8 + TAG_BYTES;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PkeError {
    #[error("message of {0} bytes exceeds the {MAX_MESSAGE_BYTES}-byte limit")]
    MessageTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PkePublicKey(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkeSecretKey(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkeKeyPair {
    pub pk: PkePublicKey,
    pub sk: PkeSecretKey,
}

/// Explicit encryption randomness.
pub type PkeRandomness = [u8; 32];

/// Multiplication modulo 2^61 − 1 by folding the high bits (inputs must be reduced).
fn mul_mod(a: u64, b: u64) -> u64 {
    let prod = a as u128 * b as u128;
    let folded = (prod as u64 & MODULUS) + (prod >> 61) as u64;
    let r = (folded & MODULUS) + (folded >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= MODULUS;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

/// `GENERATOR^(j·16^i)` for every 4-bit window `i` and digit `j`.
fn generator_table() -> &'static [[u64; 16]; 16] {
    static TABLE: OnceLock<[[u64; 16]; 16]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[1u64; 16]; 16];
        let mut base = GENERATOR;
        for row in t.iter_mut() {
            for j in 1..16 {
                row[j] = mul_mod(row[j - 1], base);
            }
            base = mul_mod(row[15], base);
        }
        t
    })
}

fn pow_generator(exp: u64) -> u64 {
    let t = generator_table();
    (0..16).fold(1, |acc, i| match (exp >> (4 * i)) & 0xf {
        0 => acc,
        d => mul_mod(acc, t[i][d as usize]),
    })
}

fn exponent_from(r: &PkeRandomness) -> u64 {
    let h = hash_parts("pke/exponent", &[r]);
    1 + u64::from_le_bytes(h[..8].try_into().unwrap()) % (MODULUS - 2)
}

pub fn pke_keygen<R: Rng + ?Sized>(rng: &mut R) -> PkeKeyPair {
    let a = rng.gen_range(1..MODULUS - 1);
    PkeKeyPair { pk: PkePublicKey(pow_generator(a)), sk: PkeSecretKey(a) }
}

fn seal(shared: u64, c1: u64, body: &mut [u8]) -> [u8; TAG_BYTES] {
    let key = hash_parts("pke/kdf", &[&c1.to_le_bytes(), &shared.to_le_bytes()]);
    let stream = expand("pke/stream", &key, body.len());
    body.iter_mut().zip(stream).for_each(|(b, s)| *b ^= s);
    hash_parts("pke/tag", &[&key, body])[..TAG_BYTES].try_into().unwrap()
}

/// Layout: `c1 (8 bytes LE) ‖ tag (16) ‖ body`.
pub fn pke_encrypt(pk: &PkePublicKey, m: &[u8], r: &PkeRandomness) -> Result<Vec<u8>, PkeError> {
    if m.len() > MAX_MESSAGE_BYTES {
        return Err(PkeError::MessageTooLong(m.len()));
    }
    let k = exponent_from(r);
    let c1 = pow_generator(k);
    let shared = pow_mod(pk.0, k);
    let mut body = m.to_vec();
    let tag = seal(shared, c1, &mut body);
    let mut out = Vec::with_capacity(HEADER_BYTES + body.len());
    out.extend_from_slice(&c1.to_le_bytes());
    out.extend_from_slice(&tag);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Returns `None` (⊥) on malformed input or tag mismatch.
pub fn pke_decrypt(sk: &PkeSecretKey, ct: &[u8]) -> Option<Vec<u8>> {
    if ct.len() < HEADER_BYTES {
        return None;
    }
    let c1 = u64::from_le_bytes(ct[..8].try_into().unwrap());
    let tag = &ct[8..HEADER_BYTES];
    let body = &ct[HEADER_BYTES..];
    let shared = pow_mod(c1, sk.0);
    let key = hash_parts("pke/kdf", &[&c1.to_le_bytes(), &shared.to_le_bytes()]);
    if hash_parts("pke/tag", &[&key, body])[..TAG_BYTES] != *tag {
        return None;
    }
    let stream = expand("pke/stream", &key, body.len());
    Some(body.iter().zip(stream).map(|(b, s)| b ^ s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_many() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let kp = pke_keygen(&mut rng);
        for _ in 0..1000 {
            let len = rng.gen_range(0..64);
            let m: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let r: PkeRandomness = rng.gen();
            let ct = pke_encrypt(&kp.pk, &m, &r).unwrap();
            assert_eq!(pke_decrypt(&kp.sk, &ct).unwrap(), m);
        }
    }

    #[test]
    fn wrong_key_is_bottom() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = pke_keygen(&mut rng);
        let b = pke_keygen(&mut rng);
        let ct = pke_encrypt(&a.pk, b"hello", &rng.gen()).unwrap();
        assert_eq!(pke_decrypt(&b.sk, &ct), None);
        assert_eq!(pke_decrypt(&a.sk, &ct[..10]), None);
    }

    #[test]
    fn deterministic_given_r() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let kp = pke_keygen(&mut rng);
        let r = [5u8; 32];
        assert_eq!(pke_encrypt(&kp.pk, b"m", &r).unwrap(), pke_encrypt(&kp.pk, b"m", &r).unwrap());
        assert_ne!(pke_encrypt(&kp.pk, b"m", &r).unwrap(), pke_encrypt(&kp.pk, b"m", &[6u8; 32]).unwrap());
    }

    #[test]
    fn group_arithmetic_matches_u128_oracle() {
        // independent square-and-multiply check against repeated multiplication
        let mut acc: u128 = 1;
        for _ in 0..100 {
            acc = acc * GENERATOR as u128 % MODULUS as u128;
        }
        assert_eq!(pow_mod(GENERATOR, 100), acc as u64);
        assert_eq!(pow_mod(GENERATOR, MODULUS - 1), 1);
        for e in [0, 1, 15, 16, 255, 1 << 40, MODULUS - 2, u64::MAX >> 3] {
            assert_eq!(pow_generator(e), pow_mod(GENERATOR, e), "exponent {e}");
        }
    }

    #[test]
    fn fold_reduction_matches_u128_remainder() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for _ in 0..10_000 {
            let a = rng.gen_range(0..MODULUS);
            let b = rng.gen_range(0..MODULUS);
            assert_eq!(mul_mod(a, b), ((a as u128 * b as u128) % MODULUS as u128) as u64);
        }
        assert_eq!(mul_mod(MODULUS - 1, MODULUS - 1), 1);
    }
}
