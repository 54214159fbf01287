//! Reference instantiations of the primitives the constructions consume.
//!
//! Every reference here is functionally correct and nothing more. Each module
//! exports a `SECURITY_STATUS` constant saying so; the heavyweight primitives
//! (iO, extractable witness encryption, one-shot signatures) have no practical
//! secure realization and are modeled as trusted in-process objects.

pub mod io;
pub mod oss;
pub mod pke;
pub mod sig;
pub mod skecd;
pub mod we;
pub mod zka;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecurityStatus {
    /// Satisfies the syntax-level correctness contract; no security claim.
    FunctionalReferenceOnly,
    /// Trusted in-process stand-in for a primitive with no practical instantiation.
    TrustedModel,
}

/// A certificate of deletion, in the shape the issuing protocol defines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeletionCert {
    Bits(BitString),
    Signed { message: BitString, signature: sig::Signature },
    OneShot(oss::OssSignature),
}
