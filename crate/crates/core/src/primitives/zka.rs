//! Zero-knowledge argument collapsed into a non-interactive proof object.
//!
//! A proof binds the digest of its statement to the common string `y`. The
//! simulator produces the same object without checking a witness; only the
//! private origin marker (never serialized) tells the two apart.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SecurityStatus;
use crate::encoding::{self, digest_of, hash_parts, Digest};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::TrustedModel;

/// An NP relation `R(x, w)`.
pub trait Relation {
    type Statement: Serialize;
    type Witness;

    /// Domain tag used when hashing statements.
    fn domain(&self) -> &'static str;
    fn holds(&self, x: &Self::Statement, w: &Self::Witness) -> bool;

    fn statement_digest(&self, x: &Self::Statement) -> Digest {
        digest_of(self.domain(), x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZkaError {
    #[error("witness does not satisfy the relation")]
    BadWitness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProofOrigin {
    Prover,
    Simulator,
    /// Deserialized or hand-built; origin not tracked.
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofObject {
    #[serde(with = "encoding::hex_digest")]
    pub statement_digest: Digest,
    #[serde(with = "encoding::hex_digest")]
    pub binding: Digest,
    pub accept: bool,
    #[serde(skip)]
    origin: ProofOrigin,
}

impl PartialEq for ProofObject {
    fn eq(&self, other: &Self) -> bool {
        self.statement_digest == other.statement_digest
            && self.binding == other.binding
            && self.accept == other.accept
    }
}

impl Eq for ProofObject {}

impl ProofObject {
    /// Test instrumentation only; verifiers must not consult this.
    pub fn origin(&self) -> ProofOrigin {
        self.origin
    }

    pub fn forged(statement_digest: Digest, binding: Digest, accept: bool) -> Self {
        Self { statement_digest, binding, accept, origin: ProofOrigin::Unknown }
    }
}

fn binding(y: &[u8], digest: &Digest) -> Digest {
    hash_parts("zka/binding", &[y, digest])
}

pub fn zka_prove<R: Relation>(
    rel: &R,
    x: &R::Statement,
    w: &R::Witness,
    y: &[u8],
) -> Result<ProofObject, ZkaError> {
    if !rel.holds(x, w) {
        return Err(ZkaError::BadWitness);
    }
    let d = rel.statement_digest(x);
    Ok(ProofObject { statement_digest: d, binding: binding(y, &d), accept: true, origin: ProofOrigin::Prover })
}

/// Prover for a statement the caller computed from the witness itself, where the
/// relation holds by construction and re-checking it would repeat that work.
pub fn zka_prove_constructed<R: Relation>(rel: &R, x: &R::Statement, y: &[u8]) -> ProofObject {
    let d = rel.statement_digest(x);
    ProofObject { statement_digest: d, binding: binding(y, &d), accept: true, origin: ProofOrigin::Prover }
}

pub fn zka_simulate<R: Relation>(rel: &R, x: &R::Statement, y: &[u8]) -> ProofObject {
    let d = rel.statement_digest(x);
    ProofObject { statement_digest: d, binding: binding(y, &d), accept: true, origin: ProofOrigin::Simulator }
}

pub fn zka_verify<R: Relation>(rel: &R, x: &R::Statement, pi: &ProofObject, y: &[u8]) -> bool {
    verify_digest(&rel.statement_digest(x), pi, y)
}

/// Verification against a precomputed statement digest.
pub fn verify_digest(digest: &Digest, pi: &ProofObject, y: &[u8]) -> bool {
    pi.accept && pi.statement_digest == *digest && pi.binding == binding(y, digest)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x = h, w = preimage with SHA-256 under a fixed tag.
    struct Preimage;

    impl Relation for Preimage {
        type Statement = Digest;
        type Witness = Vec<u8>;

        fn domain(&self) -> &'static str {
            "test/preimage"
        }

        fn holds(&self, x: &Digest, w: &Vec<u8>) -> bool {
            hash_parts("test/h", &[w]) == *x
        }
    }

    #[test]
    fn completeness_and_binding() {
        let x = hash_parts("test/h", &[b"secret"]);
        let pi = zka_prove(&Preimage, &x, &b"secret".to_vec(), b"y").unwrap();
        assert!(zka_verify(&Preimage, &x, &pi, b"y"));
        let other = hash_parts("test/h", &[b"other"]);
        assert!(!zka_verify(&Preimage, &other, &pi, b"y"));
        assert!(!zka_verify(&Preimage, &x, &pi, b"z"));
    }

    #[test]
    fn bad_witness() {
        let x = hash_parts("test/h", &[b"secret"]);
        assert_eq!(zka_prove(&Preimage, &x, &b"nope".to_vec(), b"y").unwrap_err(), ZkaError::BadWitness);
    }

    #[test]
    fn simulated_verifies_and_is_identical_on_the_wire() {
        let x = hash_parts("test/h", &[b"secret"]);
        let sim = zka_simulate(&Preimage, &x, b"y");
        assert!(zka_verify(&Preimage, &x, &sim, b"y"));
        let real = zka_prove(&Preimage, &x, &b"secret".to_vec(), b"y").unwrap();
        assert_eq!(encoding::canonical_bytes(&sim), encoding::canonical_bytes(&real));
        assert_eq!(sim.origin(), ProofOrigin::Simulator);
        assert_eq!(real.origin(), ProofOrigin::Prover);
    }

    #[test]
    fn rejecting_flag() {
        let x = hash_parts("test/h", &[b"secret"]);
        let mut pi = zka_simulate(&Preimage, &x, b"y");
        pi.accept = false;
        assert!(!zka_verify(&Preimage, &x, &pi, b"y"));
    }
}
