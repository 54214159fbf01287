//! Registered attribute-based encryption with certified deletion and certified
//! everlasting deletion, on top of a branch-based simulator for BB84 registers.
//!
//! Layers, bottom up: [`qstate`] and [`primitives`], then [`rabe`] and its
//! simulatable extension [`shad`], then the four hybrid schemes in [`protocols`],
//! and the security and correctness experiments in [`games`].

pub mod bits;
pub mod encoding;
pub mod games;
pub mod outcome;
pub mod primitives;
pub mod protocols;
pub mod qreg_serde;
pub mod qstate;
pub mod rabe;
pub mod shad;

pub use bits::{BasisString, BitString};
pub use games::{AdversaryKind, ExperimentKind, GameError, GameReport, GameSpec, GameTranscript, HandleMode};
pub use outcome::DecryptOutcome;
pub use primitives::DeletionCert;
pub use protocols::{HybridCiphertext, KeyMaterial, ProtocolError, Scheme, SchemeParams, SchemeTag, VerificationKey};
pub use qstate::{QReg, QStateError};
pub use rabe::{Attribute, Policy};
