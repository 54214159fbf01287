//! One-time secret-key encryption with certified deletion, noiseless BB84 variant.
//!
//! Bit `j` of the message is carried by block `(x_j, θ_j)`: the quantum part is
//! `|x_j⟩_{θ_j}` and the classical part is `m_j ⊕ (⊕_{i: θ_{j,i}=0} x_{j,i})`.
//! Deletion measures every qubit in the Hadamard basis; the certificate is
//! checked on the positions with `θ_{j,i} = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DeletionCert, SecurityStatus};
use crate::bits::{BasisString, BitString};
use crate::qstate::{bb84_prepare, QReg, QStateError};

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::FunctionalReferenceOnly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkecdError {
    #[error("key already used for an encryption")]
    KeyReuse,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    QState(#[from] QStateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkecdBlock {
    pub x: BitString,
    pub theta: BasisString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkecdKey {
    pub lambda: usize,
    pub blocks: Vec<SkecdBlock>,
    #[serde(skip)]
    used: bool,
}

impl SkecdKey {
    pub fn message_len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    /// Width of [`SkecdKey::to_bits`]: `2λ` bits per block.
    pub fn bit_width(message_len: usize, lambda: usize) -> usize {
        message_len * 2 * lambda
    }

    /// `x_0 ‖ θ_0 ‖ x_1 ‖ θ_1 ‖ …`
    pub fn to_bits(&self) -> BitString {
        self.blocks
            .iter()
            .flat_map(|b| b.x.iter().chain(b.theta.bits().iter()).collect::<Vec<_>>())
            .collect()
    }

    pub fn from_bits(bits: &BitString, lambda: usize) -> Result<Self, SkecdError> {
        if lambda == 0 || bits.len() % (2 * lambda) != 0 {
            return Err(SkecdError::LengthMismatch { expected: 2 * lambda, actual: bits.len() });
        }
        let blocks = (0..bits.len() / (2 * lambda))
            .map(|j| {
                let base = 2 * lambda * j;
                SkecdBlock {
                    x: bits.slice(base, base + lambda),
                    theta: BasisString::new(bits.slice(base + lambda, base + 2 * lambda)),
                }
            })
            .collect();
        Ok(Self { lambda, blocks, used: false })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkecdCiphertext {
    #[serde(with = "crate::qreg_serde::vec")]
    pub quantum: Vec<QReg>,
    pub classical: BitString,
}

pub fn skecd_keygen<R: Rng + ?Sized>(message_len: usize, lambda: usize, rng: &mut R) -> SkecdKey {
    let blocks = (0..message_len)
        .map(|_| SkecdBlock { x: BitString::random(lambda, rng), theta: BasisString::random(lambda, rng) })
        .collect();
    SkecdKey { lambda, blocks, used: false }
}

pub fn skecd_encrypt(sk: &mut SkecdKey, m: &BitString) -> Result<SkecdCiphertext, SkecdError> {
    if sk.used {
        return Err(SkecdError::KeyReuse);
    }
    if m.len() != sk.blocks.len() {
        return Err(SkecdError::LengthMismatch { expected: sk.blocks.len(), actual: m.len() });
    }
    let mut quantum = Vec::with_capacity(m.len());
    let mut classical = BitString::zeros(m.len());
    for (j, block) in sk.blocks.iter().enumerate() {
        quantum.push(bb84_prepare(&block.x, &block.theta)?);
        let mask = block.x.parity_where(block.theta.bits(), false).expect("block lengths agree");
        classical.set(j, m[j] ^ mask);
    }
    sk.used = true;
    Ok(SkecdCiphertext { quantum, classical })
}

/// Measures each block in its key basis and unmasks. The measured blocks are
/// replaced by their post-measurement states. `None` is ⊥.
pub fn skecd_decrypt<R: Rng + ?Sized>(sk: &SkecdKey, ct: &mut SkecdCiphertext, rng: &mut R) -> Option<BitString> {
    if ct.quantum.len() != sk.blocks.len() || ct.classical.len() != sk.blocks.len() {
        return None;
    }
    let mut out = BitString::zeros(sk.blocks.len());
    for (j, block) in sk.blocks.iter().enumerate() {
        if ct.quantum[j].n_wires() < sk.lambda {
            return None;
        }
        let m = ct.quantum[j].measure_in_basis(&block.theta, rng).ok()?;
        let mask = m.outcome.parity_where(block.theta.bits(), false).ok()?;
        out.set(j, ct.classical[j] ^ mask);
        ct.quantum[j] = m.post_state;
    }
    Some(out)
}

/// Measures every qubit in the Hadamard basis; the certificate is the concatenated outcomes.
pub fn skecd_delete<R: Rng + ?Sized>(ct: &mut SkecdCiphertext, rng: &mut R) -> Result<DeletionCert, SkecdError> {
    let mut cert = BitString::default();
    for reg in ct.quantum.iter_mut() {
        let m = reg.measure_in_basis(&BasisString::hadamard(reg.n_wires()), rng)?;
        cert = cert.concat(&m.outcome);
        *reg = m.post_state;
    }
    Ok(DeletionCert::Bits(cert))
}

pub fn skecd_verify(sk: &SkecdKey, cert: &DeletionCert) -> bool {
    let DeletionCert::Bits(bits) = cert else {
        return false;
    };
    if bits.len() != sk.blocks.len() * sk.lambda {
        return false;
    }
    sk.blocks.iter().enumerate().all(|(j, block)| {
        let part = bits.slice(j * sk.lambda, (j + 1) * sk.lambda);
        part.agrees_where(&block.x, block.theta.bits(), true)
    })
}
