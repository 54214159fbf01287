//! The four deletion-enabled schemes, each with the eight-algorithm syntax
//! `Setup, KeyGen, RegPK, Update, Encrypt, Decrypt, Delete, Verify`.
//!
//! | scheme  | layer | quantum part                  | mask positions | cert checked on     |
//! |---------|-------|-------------------------------|----------------|---------------------|
//! | PriVCD  | shad  | SKE-CD blocks                 | θ_i = 0        | θ_i = 1             |
//! | PubVCD  | shad  | none (one-shot token)         | n/a            | OSS signature on 1  |
//! | PriVCED | rabe  | `|x⟩_θ` per bit               | θ_i = 0        | θ_i = 1             |
//! | PubVCED | rabe  | `|x⟩_θ` + coherent signature  | θ_i = 1        | signature on `x'`   |

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BasisString, BitString};
use crate::encoding::{self, EncodingError};
use crate::outcome::DecryptOutcome;
use crate::primitives::oss::{self, OssCrs, OssError, OssPublicKey, OssSecretKey};
use crate::primitives::sig::{self, SigError, SignOracle, Signature, SigningKey};
use crate::primitives::skecd::{self, SkecdBlock, SkecdCiphertext, SkecdError, SkecdKey};
use crate::primitives::we::{self, OssSignedStatement, WeCiphertext};
use crate::primitives::DeletionCert;
use crate::qstate::{bb84_prepare, QReg, QStateError};
use crate::rabe::{
    self, Attribute, AuxState, Crs, DirectoryView, HelperSecretKey, MasterPublicKey, Policy, RabeCiphertext,
    RabeError, RabePublicKey, RabeSecretKey,
};
use crate::shad::{self, ShadAux, ShadCiphertext, ShadCrs, ShadError, ShadHsk, ShadMpk, ShadPk, ShadSk, ShadViews};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("message has {actual} bits, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("expected a {expected} object, got {actual}")]
    SchemeMismatch { expected: SchemeTag, actual: SchemeTag },
    #[error("malformed ciphertext: {0}")]
    Shape(String),
    #[error("session message out of order: expected {expected}, got {got}")]
    SessionOrderViolation { expected: &'static str, got: &'static str },
    #[error(transparent)]
    Shad(#[from] ShadError),
    #[error(transparent)]
    Rabe(#[from] RabeError),
    #[error(transparent)]
    Skecd(#[from] SkecdError),
    #[error(transparent)]
    QState(#[from] QStateError),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Oss(#[from] OssError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeTag {
    PriVcd,
    PubVcd,
    PriVced,
    PubVced,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 4] = [SchemeTag::PriVcd, SchemeTag::PubVcd, SchemeTag::PriVced, SchemeTag::PubVced];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::PriVcd => "privcd",
            SchemeTag::PubVcd => "pubvcd",
            SchemeTag::PriVced => "privced",
            SchemeTag::PubVced => "pubvced",
        }
    }

    /// Certified everlasting deletion (quantum ciphertext, no key reveal after deletion).
    pub fn is_everlasting(self) -> bool {
        matches!(self, SchemeTag::PriVced | SchemeTag::PubVced)
    }

    pub fn is_publicly_verifiable(self) -> bool {
        matches!(self, SchemeTag::PubVcd | SchemeTag::PubVced)
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeTag {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        SchemeTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProtocolError::Parameter(format!("unknown scheme {s:?}")))
    }
}

/// `λ`, attribute width `τ`, and message length `ℓ_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub lambda: usize,
    pub tau: usize,
    pub message_bits: usize,
}

impl SchemeParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.lambda == 0 || self.tau == 0 || self.message_bits == 0 {
            return Err(ProtocolError::Parameter(format!(
                "lambda = {}, tau = {}, message_bits = {}; all must be positive",
                self.lambda, self.tau, self.message_bits
            )));
        }
        Ok(())
    }
}

/// Classical components, one shape per scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum ClassicalPart {
    PriVcd { srabe: ShadCiphertext, ske: BitString },
    PubVcd { srabe: ShadCiphertext },
    PriVced { rabe: Vec<RabeCiphertext> },
    PubVced { rabe: Vec<RabeCiphertext> },
}

impl ClassicalPart {
    pub fn tag(&self) -> SchemeTag {
        match self {
            ClassicalPart::PriVcd { .. } => SchemeTag::PriVcd,
            ClassicalPart::PubVcd { .. } => SchemeTag::PubVcd,
            ClassicalPart::PriVced { .. } => SchemeTag::PriVced,
            ClassicalPart::PubVced { .. } => SchemeTag::PubVced,
        }
    }
}

/// Protocol ciphertext. The quantum registers are simulation artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridCiphertext {
    pub scheme_tag: SchemeTag,
    pub classical: ClassicalPart,
    #[serde(with = "crate::qreg_serde::vec")]
    pub quantum: Vec<QReg>,
    /// PubVCD only: the receiver's one-shot signing key.
    pub receiver_state: Option<OssSecretKey>,
}

impl HybridCiphertext {
    pub fn check_shape(&self) -> Result<(), ProtocolError> {
        let bad = |why: &str| Err(ProtocolError::Shape(why.into()));
        if self.classical.tag() != self.scheme_tag {
            return Err(ProtocolError::SchemeMismatch { expected: self.scheme_tag, actual: self.classical.tag() });
        }
        match &self.classical {
            ClassicalPart::PriVcd { ske, .. } if ske.len() != self.quantum.len() => {
                bad("one register per SKE-CD block")
            }
            ClassicalPart::PubVcd { .. } if !self.quantum.is_empty() => bad("PubVCD carries no registers"),
            ClassicalPart::PubVcd { .. } if self.receiver_state.is_none() => bad("PubVCD needs the one-shot key"),
            ClassicalPart::PriVced { rabe } | ClassicalPart::PubVced { rabe } if rabe.len() != self.quantum.len() => {
                bad("one register per encrypted bit")
            }
            _ if self.scheme_tag != SchemeTag::PubVcd && self.receiver_state.is_some() => {
                bad("only PubVCD carries a one-shot key")
            }
            _ => Ok(()),
        }
    }

    /// Fault injection: flips a bit of every sub-ciphertext body in the first classical component.
    pub fn tamper_classical(&mut self) {
        let flip = |ct: &mut RabeCiphertext| {
            for e in ct.entries.iter_mut() {
                if let Some(b) = e.body.get_mut(8) {
                    *b ^= 1;
                }
            }
        };
        match &mut self.classical {
            ClassicalPart::PriVcd { srabe, .. } | ClassicalPart::PubVcd { srabe } => {
                srabe.grid.iter_mut().flatten().for_each(flip)
            }
            ClassicalPart::PriVced { rabe } | ClassicalPart::PubVced { rabe } => {
                rabe.iter_mut().take(1).for_each(flip)
            }
        }
    }
}

/// Output of Encrypt used by Verify. PubVCD and PubVCED payloads are public.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", content = "payload", rename_all = "lowercase")]
pub enum VerificationKey {
    /// `vk := ske.sk`
    PriVcd(SkecdKey),
    /// `vk := (oss.crs, oss.pk)`
    PubVcd { crs: OssCrs, pk: OssPublicKey },
    /// `vk := (x, θ)` per bit.
    PriVced(Vec<SkecdBlock>),
    /// One signature verification key per bit.
    PubVced(Vec<sig::VerificationKey>),
}

impl VerificationKey {
    pub fn tag(&self) -> SchemeTag {
        match self {
            VerificationKey::PriVcd(_) => SchemeTag::PriVcd,
            VerificationKey::PubVcd { .. } => SchemeTag::PubVcd,
            VerificationKey::PriVced(_) => SchemeTag::PriVced,
            VerificationKey::PubVced(_) => SchemeTag::PubVced,
        }
    }

    pub fn is_public(&self) -> bool {
        self.tag().is_publicly_verifiable()
    }
}

/// What an encryptor reads: the master public key and the public directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directory<M, V> {
    pub mpk: M,
    pub views: V,
}

pub type ShadDirectory = Directory<ShadMpk, ShadViews>;
pub type RabeDirectory = Directory<MasterPublicKey, DirectoryView>;

/// The eight-algorithm syntax shared by all four schemes.
pub trait Scheme {
    const TAG: SchemeTag;
    type Crs: Clone + fmt::Debug + Serialize + DeserializeOwned;
    type Aux: Clone + Serialize + DeserializeOwned;
    type Directory: Clone + Serialize + DeserializeOwned;
    type Pk: Clone + PartialEq + fmt::Debug + Serialize + DeserializeOwned;
    type Sk: Clone + Serialize + DeserializeOwned;
    type Hsk: Clone + PartialEq + Serialize + DeserializeOwned;

    fn setup<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<Self::Crs, ProtocolError>;
    fn params(crs: &Self::Crs) -> SchemeParams;
    fn new_aux(crs: &Self::Crs) -> Self::Aux;
    fn epoch(aux: &Self::Aux) -> usize;
    fn hsk_epoch(hsk: &Self::Hsk) -> usize;
    fn directory(crs: &Self::Crs, aux: &Self::Aux) -> Self::Directory;
    fn keygen<R: Rng + ?Sized>(
        crs: &Self::Crs,
        aux: Option<&Self::Aux>,
        policy: &Policy,
        rng: &mut R,
    ) -> Result<(Self::Pk, Self::Sk), ProtocolError>;
    fn regpk(
        crs: &Self::Crs,
        aux: &Self::Aux,
        pk: &Self::Pk,
        policy: &Policy,
    ) -> Result<(Self::Directory, Self::Aux), ProtocolError>;
    fn update(crs: &Self::Crs, aux: &Self::Aux, pk: &Self::Pk) -> Result<Self::Hsk, ProtocolError>;
    fn encrypt<R: Rng + ?Sized>(
        crs: &Self::Crs,
        dir: &Self::Directory,
        x: &Attribute,
        mu: &BitString,
        rng: &mut R,
    ) -> Result<(VerificationKey, HybridCiphertext), ProtocolError>;
    /// Quantum parts are measured in place.
    fn decrypt<R: Rng + ?Sized>(
        sk: &Self::Sk,
        hsk: &Self::Hsk,
        x: &Attribute,
        ct: &mut HybridCiphertext,
        rng: &mut R,
    ) -> DecryptOutcome<BitString>;
    fn delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError>;
    fn verify(vk: &VerificationKey, cert: &DeletionCert) -> bool;
    fn key_material(sk: &Self::Sk, hsk: &Self::Hsk) -> KeyMaterial;
}

/// A decryption key pair with its layer made explicit, for scheme-agnostic callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "lowercase")]
pub enum KeyMaterial {
    Shad { sk: ShadSk, hsk: ShadHsk },
    Rabe { sk: RabeSecretKey, hsk: HelperSecretKey },
}

fn check_len(expected: usize, mu: &BitString) -> Result<(), ProtocolError> {
    if mu.len() != expected {
        return Err(ProtocolError::LengthMismatch { expected, actual: mu.len() });
    }
    Ok(())
}

fn expect_tag(expected: SchemeTag, ct: &HybridCiphertext) -> Result<(), ProtocolError> {
    if ct.scheme_tag != expected {
        return Err(ProtocolError::SchemeMismatch { expected, actual: ct.scheme_tag });
    }
    ct.check_shape()
}

/// Crs of the two schemes layered on Shad-RABE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadLayerCrs {
    pub params: SchemeParams,
    pub shad: ShadCrs,
}

/// Crs of the two schemes layered directly on RABE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabeLayerCrs {
    pub params: SchemeParams,
    pub rabe: Crs,
}

macro_rules! shad_layer_common {
    () => {
        type Crs = ShadLayerCrs;
        type Aux = ShadAux;
        type Directory = ShadDirectory;
        type Pk = ShadPk;
        type Sk = ShadSk;
        type Hsk = ShadHsk;

        fn params(crs: &ShadLayerCrs) -> SchemeParams {
            crs.params
        }

        fn new_aux(crs: &ShadLayerCrs) -> ShadAux {
            ShadAux::new(&crs.shad)
        }

        fn epoch(aux: &ShadAux) -> usize {
            aux.epoch()
        }

        fn hsk_epoch(hsk: &ShadHsk) -> usize {
            hsk.grid[0][0].epoch
        }

        fn directory(crs: &ShadLayerCrs, aux: &ShadAux) -> ShadDirectory {
            Directory { mpk: aux.mpk(&crs.shad), views: aux.views() }
        }

        fn keygen<R: Rng + ?Sized>(
            crs: &ShadLayerCrs,
            aux: Option<&ShadAux>,
            policy: &Policy,
            rng: &mut R,
        ) -> Result<(ShadPk, ShadSk), ProtocolError> {
            Ok(shad::keygen(&crs.shad, aux, policy, rng)?)
        }

        fn regpk(
            crs: &ShadLayerCrs,
            aux: &ShadAux,
            pk: &ShadPk,
            policy: &Policy,
        ) -> Result<(ShadDirectory, ShadAux), ProtocolError> {
            let (mpk, next) = shad::regpk(&crs.shad, aux, pk, policy)?;
            let views = next.views();
            Ok((Directory { mpk, views }, next))
        }

        fn update(crs: &ShadLayerCrs, aux: &ShadAux, pk: &ShadPk) -> Result<ShadHsk, ProtocolError> {
            Ok(shad::update(&crs.shad, aux, pk)?)
        }

        fn key_material(sk: &ShadSk, hsk: &ShadHsk) -> KeyMaterial {
            KeyMaterial::Shad { sk: sk.clone(), hsk: hsk.clone() }
        }
    };
}

macro_rules! rabe_layer_common {
    () => {
        type Crs = RabeLayerCrs;
        type Aux = AuxState;
        type Directory = RabeDirectory;
        type Pk = RabePublicKey;
        type Sk = RabeSecretKey;
        type Hsk = HelperSecretKey;

        fn setup<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<RabeLayerCrs, ProtocolError> {
            params.validate()?;
            Ok(RabeLayerCrs { params: *params, rabe: rabe::setup(params.lambda, params.tau, rng)? })
        }

        fn params(crs: &RabeLayerCrs) -> SchemeParams {
            crs.params
        }

        fn new_aux(crs: &RabeLayerCrs) -> AuxState {
            AuxState::new(&crs.rabe)
        }

        fn epoch(aux: &AuxState) -> usize {
            aux.epoch()
        }

        fn hsk_epoch(hsk: &HelperSecretKey) -> usize {
            hsk.epoch
        }

        fn directory(_crs: &RabeLayerCrs, aux: &AuxState) -> RabeDirectory {
            Directory { mpk: aux.mpk(), views: aux.view() }
        }

        fn keygen<R: Rng + ?Sized>(
            crs: &RabeLayerCrs,
            aux: Option<&AuxState>,
            policy: &Policy,
            rng: &mut R,
        ) -> Result<(RabePublicKey, RabeSecretKey), ProtocolError> {
            Ok(rabe::keygen(&crs.rabe, aux, policy, rng)?)
        }

        fn regpk(
            crs: &RabeLayerCrs,
            aux: &AuxState,
            pk: &RabePublicKey,
            policy: &Policy,
        ) -> Result<(RabeDirectory, AuxState), ProtocolError> {
            let (mpk, next) = rabe::regpk(&crs.rabe, aux, pk, policy)?;
            let views = next.view();
            Ok((Directory { mpk, views }, next))
        }

        fn update(crs: &RabeLayerCrs, aux: &AuxState, pk: &RabePublicKey) -> Result<HelperSecretKey, ProtocolError> {
            Ok(rabe::update(&crs.rabe, aux, pk)?)
        }

        fn key_material(sk: &RabeSecretKey, hsk: &HelperSecretKey) -> KeyMaterial {
            KeyMaterial::Rabe { sk: sk.clone(), hsk: hsk.clone() }
        }
    };
}

// ---------------------------------------------------------------- PriVCD

pub struct PriVcd;

/// Shad message width for PriVCD: the serialized SKE-CD key.
pub fn privcd_shad_bits(params: &SchemeParams) -> usize {
    SkecdKey::bit_width(params.message_bits, params.lambda)
}

pub fn privcd_encrypt<R: Rng + ?Sized>(
    crs: &ShadLayerCrs,
    dir: &ShadDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
    check_len(crs.params.message_bits, mu)?;
    let mut ske_sk = skecd::skecd_keygen(mu.len(), crs.params.lambda, rng);
    let srabe = shad::encrypt(&crs.shad, &dir.mpk, &dir.views, x, &ske_sk.to_bits(), rng)?;
    let ske_ct = skecd::skecd_encrypt(&mut ske_sk, mu)?;
    let ct = HybridCiphertext {
        scheme_tag: SchemeTag::PriVcd,
        classical: ClassicalPart::PriVcd { srabe, ske: ske_ct.classical },
        quantum: ske_ct.quantum,
        receiver_state: None,
    };
    Ok((VerificationKey::PriVcd(ske_sk), ct))
}

/// Runs `f` on the SKE-CD ciphertext held inside `ct`, then puts the registers back.
fn with_skecd<T>(ct: &mut HybridCiphertext, f: impl FnOnce(&mut SkecdCiphertext) -> T) -> Option<T> {
    let ClassicalPart::PriVcd { ske, .. } = &ct.classical else {
        return None;
    };
    let mut inner = SkecdCiphertext { quantum: std::mem::take(&mut ct.quantum), classical: ske.clone() };
    let out = f(&mut inner);
    ct.quantum = inner.quantum;
    Some(out)
}

pub fn privcd_decrypt<R: Rng + ?Sized>(
    sk: &ShadSk,
    hsk: &ShadHsk,
    x: &Attribute,
    ct: &mut HybridCiphertext,
    rng: &mut R,
) -> DecryptOutcome<BitString> {
    if expect_tag(SchemeTag::PriVcd, ct).is_err() {
        return DecryptOutcome::Reject;
    }
    let ClassicalPart::PriVcd { srabe, ske } = &ct.classical else {
        return DecryptOutcome::Reject;
    };
    let blocks = ske.len();
    shad::decrypt(sk, hsk, x, srabe).and_then(|key_bits| {
        if blocks == 0 || key_bits.len() % (2 * blocks) != 0 {
            return DecryptOutcome::Reject;
        }
        let Ok(ske_sk) = SkecdKey::from_bits(&key_bits, key_bits.len() / (2 * blocks)) else {
            return DecryptOutcome::Reject;
        };
        match with_skecd(ct, |inner| skecd::skecd_decrypt(&ske_sk, inner, rng)) {
            Some(Some(m)) => DecryptOutcome::Plaintext(m),
            _ => DecryptOutcome::Reject,
        }
    })
}

pub fn privcd_delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
    expect_tag(SchemeTag::PriVcd, ct)?;
    with_skecd(ct, |inner| skecd::skecd_delete(inner, rng))
        .ok_or_else(|| ProtocolError::Shape("not a PriVCD ciphertext".into()))?
        .map_err(Into::into)
}

pub fn privcd_verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    match vk {
        VerificationKey::PriVcd(ske_sk) => skecd::skecd_verify(ske_sk, cert),
        _ => false,
    }
}

impl Scheme for PriVcd {
    const TAG: SchemeTag = SchemeTag::PriVcd;
    shad_layer_common!();

    fn setup<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<ShadLayerCrs, ProtocolError> {
        params.validate()?;
        let shad = shad::setup(params.lambda, params.tau, privcd_shad_bits(params), rng)?;
        Ok(ShadLayerCrs { params: *params, shad })
    }

    fn encrypt<R: Rng + ?Sized>(
        crs: &ShadLayerCrs,
        dir: &ShadDirectory,
        x: &Attribute,
        mu: &BitString,
        rng: &mut R,
    ) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
        privcd_encrypt(crs, dir, x, mu, rng)
    }

    fn decrypt<R: Rng + ?Sized>(
        sk: &ShadSk,
        hsk: &ShadHsk,
        x: &Attribute,
        ct: &mut HybridCiphertext,
        rng: &mut R,
    ) -> DecryptOutcome<BitString> {
        privcd_decrypt(sk, hsk, x, ct, rng)
    }

    fn delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
        privcd_delete(ct, rng)
    }

    fn verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
        privcd_verify(vk, cert)
    }
}

// ---------------------------------------------------------------- PubVCD

pub struct PubVcd;

pub type PubVcdWeCiphertext = WeCiphertext<OssSignedStatement>;

/// `len (u32 LE) ‖ bytes`.
fn pack_bits(m: &BitString) -> Vec<u8> {
    let mut out = (m.len() as u32).to_le_bytes().to_vec();
    out.extend(m.to_bytes());
    out
}

fn unpack_bits(bytes: &[u8]) -> Option<BitString> {
    let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let body = &bytes[4..];
    (body.len() == len.div_ceil(8)).then(|| BitString::from_bytes(body, len))
}

/// Shad message width for PubVCD: the canonical encoding of `we.ct`, which has a
/// fixed length for a given `ℓ_m`.
pub fn pubvcd_shad_bits(params: &SchemeParams) -> usize {
    let statement = OssSignedStatement {
        crs: OssCrs([0; 32]),
        pk: OssPublicKey { image0: [0; 32], image1: [0; 32] },
        message: false,
    };
    let mut rng = rand_chacha::ChaCha20Rng::from_seed([0; 32]);
    let ct = we::we_encrypt(statement, &pack_bits(&BitString::zeros(params.message_bits)), &mut rng);
    encoding::canonical_bytes(&ct).len() * 8
}


/// The three protocol messages, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionMessage {
    OssCrs { crs: OssCrs },
    OssPk { pk: OssPublicKey },
    Ciphertext { srabe: ShadCiphertext },
}

impl SessionMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionMessage::OssCrs { .. } => "oss_crs",
            SessionMessage::OssPk { .. } => "oss_pk",
            SessionMessage::Ciphertext { .. } => "ciphertext",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionRole {
    Sender,
    Receiver,
}

/// Ordered record of one encryption session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub messages: Vec<(SessionRole, SessionMessage)>,
}

enum SenderState {
    Start,
    AwaitPk { crs: OssCrs },
    Done,
}

/// `Sndr(mpk, X, μ)`.
pub struct PubVcdSender<'a> {
    crs: &'a ShadLayerCrs,
    dir: &'a ShadDirectory,
    x: &'a Attribute,
    mu: &'a BitString,
    state: SenderState,
}

impl<'a> PubVcdSender<'a> {
    pub fn new(
        crs: &'a ShadLayerCrs,
        dir: &'a ShadDirectory,
        x: &'a Attribute,
        mu: &'a BitString,
    ) -> Result<Self, ProtocolError> {
        check_len(crs.params.message_bits, mu)?;
        Ok(Self { crs, dir, x, mu, state: SenderState::Start })
    }

    /// First message: `oss.crs ← OSS.Setup`.
    pub fn start<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SessionMessage, ProtocolError> {
        if !matches!(self.state, SenderState::Start) {
            return Err(ProtocolError::SessionOrderViolation { expected: "nothing", got: "start" });
        }
        let crs = oss::oss_setup(rng);
        self.state = SenderState::AwaitPk { crs: crs.clone() };
        Ok(SessionMessage::OssCrs { crs })
    }

    /// Consumes `oss.pk`; returns the ciphertext message and `vk`.
    pub fn receive<R: Rng + ?Sized>(
        &mut self,
        msg: SessionMessage,
        rng: &mut R,
    ) -> Result<(SessionMessage, VerificationKey), ProtocolError> {
        let SenderState::AwaitPk { crs } = &self.state else {
            return Err(ProtocolError::SessionOrderViolation { expected: "nothing", got: msg.kind() });
        };
        let SessionMessage::OssPk { pk } = msg else {
            return Err(ProtocolError::SessionOrderViolation { expected: "oss_pk", got: msg.kind() });
        };
        let crs = crs.clone();
        let statement = OssSignedStatement { crs: crs.clone(), pk: pk.clone(), message: false };
        let we_ct = we::we_encrypt(statement, &pack_bits(self.mu), rng);
        let bytes = encoding::canonical_bytes(&we_ct);
        let payload = BitString::from_bytes(&bytes, bytes.len() * 8);
        let srabe = shad::encrypt(&self.crs.shad, &self.dir.mpk, &self.dir.views, self.x, &payload, rng)?;
        self.state = SenderState::Done;
        Ok((SessionMessage::Ciphertext { srabe }, VerificationKey::PubVcd { crs, pk }))
    }
}

enum ReceiverState {
    AwaitCrs,
    AwaitCt { sk: OssSecretKey },
    Done { ct: Box<HybridCiphertext> },
}

/// `Rcvr`, no input.
pub struct PubVcdReceiver {
    state: ReceiverState,
}

impl Default for PubVcdReceiver {
    fn default() -> Self {
        Self::new()
    }
}

impl PubVcdReceiver {
    pub fn new() -> Self {
        Self { state: ReceiverState::AwaitCrs }
    }

    /// Returns the reply, if the protocol calls for one.
    pub fn receive<R: Rng + ?Sized>(
        &mut self,
        msg: SessionMessage,
        rng: &mut R,
    ) -> Result<Option<SessionMessage>, ProtocolError> {
        match (&self.state, msg) {
            (ReceiverState::AwaitCrs, SessionMessage::OssCrs { crs }) => {
                let kp = oss::oss_keygen(&crs, rng);
                self.state = ReceiverState::AwaitCt { sk: kp.sk };
                Ok(Some(SessionMessage::OssPk { pk: kp.pk }))
            }
            (ReceiverState::AwaitCt { sk }, SessionMessage::Ciphertext { srabe }) => {
                let ct = HybridCiphertext {
                    scheme_tag: SchemeTag::PubVcd,
                    classical: ClassicalPart::PubVcd { srabe },
                    quantum: Vec::new(),
                    receiver_state: Some(sk.clone()),
                };
                self.state = ReceiverState::Done { ct: Box::new(ct) };
                Ok(None)
            }
            (ReceiverState::AwaitCrs, m) => {
                Err(ProtocolError::SessionOrderViolation { expected: "oss_crs", got: m.kind() })
            }
            (ReceiverState::AwaitCt { .. }, m) => {
                Err(ProtocolError::SessionOrderViolation { expected: "ciphertext", got: m.kind() })
            }
            (ReceiverState::Done { .. }, m) => {
                Err(ProtocolError::SessionOrderViolation { expected: "nothing", got: m.kind() })
            }
        }
    }

    /// `ct := (srabe.ct, oss.sk)`, once all three messages are in.
    pub fn finish(self) -> Result<HybridCiphertext, ProtocolError> {
        match self.state {
            ReceiverState::Done { ct } => Ok(*ct),
            _ => Err(ProtocolError::SessionOrderViolation { expected: "ciphertext", got: "finish" }),
        }
    }
}

/// Runs both parties in-process.
pub fn pubvcd_encrypt_session<R: Rng + ?Sized>(
    crs: &ShadLayerCrs,
    dir: &ShadDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext, SessionTranscript), ProtocolError> {
    let mut transcript = SessionTranscript::default();
    let mut sender = PubVcdSender::new(crs, dir, x, mu)?;
    let mut receiver = PubVcdReceiver::new();
    let m1 = sender.start(rng)?;
    transcript.messages.push((SessionRole::Sender, m1.clone()));
    let m2 = receiver
        .receive(m1, rng)?
        .ok_or(ProtocolError::SessionOrderViolation { expected: "oss_pk", got: "nothing" })?;
    transcript.messages.push((SessionRole::Receiver, m2.clone()));
    let (m3, vk) = sender.receive(m2, rng)?;
    transcript.messages.push((SessionRole::Sender, m3.clone()));
    receiver.receive(m3, rng)?;
    Ok((vk, receiver.finish()?, transcript))
}

/// Signs 0 with the held one-shot key before anything else. A consumed key
/// (after Delete) surfaces as ⊥.
pub fn pubvcd_decrypt(sk: &ShadSk, hsk: &ShadHsk, x: &Attribute, ct: &mut HybridCiphertext) -> DecryptOutcome<BitString> {
    if expect_tag(SchemeTag::PubVcd, ct).is_err() {
        return DecryptOutcome::Reject;
    }
    let Some(oss_sk) = ct.receiver_state.as_mut() else {
        return DecryptOutcome::Reject;
    };
    let Ok(sigma) = oss::oss_sign(oss_sk, false) else {
        return DecryptOutcome::Reject;
    };
    let ClassicalPart::PubVcd { srabe } = &ct.classical else {
        return DecryptOutcome::Reject;
    };
    shad::decrypt(sk, hsk, x, srabe).and_then(|payload| {
        let Ok(we_ct) = encoding::from_canonical_bytes::<PubVcdWeCiphertext>(&payload.to_bytes()) else {
            return DecryptOutcome::Reject;
        };
        match we::we_decrypt(&we_ct, Some(&sigma)).ok().and_then(|m| unpack_bits(&m)) {
            Some(mu) => DecryptOutcome::Plaintext(mu),
            None => DecryptOutcome::Reject,
        }
    })
}

/// `σ ← OSS.Sign(oss.sk, 1)`. Fails with `OneShotConsumed` after a decryption.
pub fn pubvcd_delete(ct: &mut HybridCiphertext) -> Result<DeletionCert, ProtocolError> {
    expect_tag(SchemeTag::PubVcd, ct)?;
    let oss_sk = ct.receiver_state.as_mut().ok_or_else(|| ProtocolError::Shape("missing one-shot key".into()))?;
    Ok(DeletionCert::OneShot(oss::oss_sign(oss_sk, true)?))
}

/// Needs only the published `(oss.crs, oss.pk)`.
pub fn pubvcd_verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    match (vk, cert) {
        (VerificationKey::PubVcd { crs, pk }, DeletionCert::OneShot(sigma)) => oss::oss_verify(crs, pk, sigma, true),
        _ => false,
    }
}

impl Scheme for PubVcd {
    const TAG: SchemeTag = SchemeTag::PubVcd;
    shad_layer_common!();

    fn setup<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<ShadLayerCrs, ProtocolError> {
        params.validate()?;
        let shad = shad::setup(params.lambda, params.tau, pubvcd_shad_bits(params), rng)?;
        Ok(ShadLayerCrs { params: *params, shad })
    }

    fn encrypt<R: Rng + ?Sized>(
        crs: &ShadLayerCrs,
        dir: &ShadDirectory,
        x: &Attribute,
        mu: &BitString,
        rng: &mut R,
    ) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
        pubvcd_encrypt_session(crs, dir, x, mu, rng).map(|(vk, ct, _)| (vk, ct))
    }

    fn decrypt<R: Rng + ?Sized>(
        sk: &ShadSk,
        hsk: &ShadHsk,
        x: &Attribute,
        ct: &mut HybridCiphertext,
        _rng: &mut R,
    ) -> DecryptOutcome<BitString> {
        pubvcd_decrypt(sk, hsk, x, ct)
    }

    fn delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, _rng: &mut R) -> Result<DeletionCert, ProtocolError> {
        pubvcd_delete(ct)
    }

    fn verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
        pubvcd_verify(vk, cert)
    }
}

// ---------------------------------------------------------------- PriVCED

pub struct PriVced;

/// RABE plaintext of one PriVCED bit: `(θ, b ⊕ ⊕_{θ_i=0} x_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivcedPayload {
    pub theta: BasisString,
    pub masked: bool,
}

/// Parity of `x` over the positions where `θ_i = 0`.
pub fn privced_mask(x: &BitString, theta: &BasisString) -> bool {
    x.parity_where(theta.bits(), false).expect("x and θ have equal length")
}


pub fn privced_encrypt<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    b: bool,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
    privced_encrypt_many(crs, dir, x, &BitString::new(vec![b]), rng)
}

/// Each bit gets an independent `(x, θ)` block and RABE ciphertext.
pub fn privced_encrypt_many<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
    privced_encrypt_with_payloads(crs, dir, x, mu, rng).map(|(vk, ct, _)| (vk, ct))
}

/// As [`privced_encrypt_many`], also returning the RABE plaintexts.
pub fn privced_encrypt_with_payloads<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext, Vec<PrivcedPayload>), ProtocolError> {
    if mu.is_empty() {
        return Err(ProtocolError::LengthMismatch { expected: 1, actual: 0 });
    }
    let lambda = crs.params.lambda;
    let mut blocks = Vec::with_capacity(mu.len());
    let mut quantum = Vec::with_capacity(mu.len());
    let mut rabe_cts = Vec::with_capacity(mu.len());
    let mut payloads = Vec::with_capacity(mu.len());
    for b in mu.iter() {
        let xs = BitString::random(lambda, rng);
        let theta = BasisString::random(lambda, rng);
        let payload = PrivcedPayload { theta: theta.clone(), masked: b ^ privced_mask(&xs, &theta) };
        let bytes = encoding::canonical_bytes(&payload);
        rabe_cts.push(rabe::encrypt(&crs.rabe, &dir.mpk, &dir.views, x, &bytes, rng)?);
        quantum.push(bb84_prepare(&xs, &theta)?);
        blocks.push(SkecdBlock { x: xs, theta });
        payloads.push(payload);
    }
    let ct = HybridCiphertext {
        scheme_tag: SchemeTag::PriVced,
        classical: ClassicalPart::PriVced { rabe: rabe_cts },
        quantum,
        receiver_state: None,
    };
    Ok((VerificationKey::PriVced(blocks), ct, payloads))
}

/// Per bit: RABE-decrypt `(θ, b')`, measure in basis θ, output `b' ⊕ ⊕_{θ_i=0} x_i`.
pub fn privced_decrypt<R: Rng + ?Sized>(
    sk: &RabeSecretKey,
    hsk: &HelperSecretKey,
    x: &Attribute,
    ct: &mut HybridCiphertext,
    rng: &mut R,
) -> DecryptOutcome<BitString> {
    if expect_tag(SchemeTag::PriVced, ct).is_err() {
        return DecryptOutcome::Reject;
    }
    let ClassicalPart::PriVced { rabe: cts } = &ct.classical else {
        return DecryptOutcome::Reject;
    };
    let payloads: Vec<PrivcedPayload> = match open_payloads(sk, hsk, x, cts) {
        DecryptOutcome::Plaintext(p) => p,
        DecryptOutcome::GetUpdate => return DecryptOutcome::GetUpdate,
        DecryptOutcome::Reject => return DecryptOutcome::Reject,
    };
    let mut out = BitString::zeros(payloads.len());
    for (j, p) in payloads.iter().enumerate() {
        if ct.quantum[j].n_wires() < p.theta.len() {
            return DecryptOutcome::Reject;
        }
        let Ok(m) = ct.quantum[j].measure_in_basis(&p.theta, rng) else {
            return DecryptOutcome::Reject;
        };
        out.set(j, p.masked ^ privced_mask(&m.outcome, &p.theta));
        ct.quantum[j] = m.post_state;
    }
    DecryptOutcome::Plaintext(out)
}

/// Measures every register in the Hadamard basis; the cert concatenates the outcomes.
pub fn privced_delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
    expect_tag(SchemeTag::PriVced, ct)?;
    let mut cert = BitString::default();
    for reg in ct.quantum.iter_mut() {
        let m = reg.measure_in_basis(&BasisString::hadamard(reg.n_wires()), rng)?;
        cert = cert.concat(&m.outcome);
        *reg = m.post_state;
    }
    Ok(DeletionCert::Bits(cert))
}

/// `⊤` iff `x_i = x'_i` wherever `θ_i = 1`, block by block.
pub fn privced_verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    let (VerificationKey::PriVced(blocks), DeletionCert::Bits(bits)) = (vk, cert) else {
        return false;
    };
    let total: usize = blocks.iter().map(|b| b.x.len()).sum();
    if bits.len() != total {
        return false;
    }
    let mut at = 0;
    blocks.iter().all(|b| {
        let part = bits.slice(at, at + b.x.len());
        at += b.x.len();
        part.agrees_where(&b.x, b.theta.bits(), true)
    })
}

impl Scheme for PriVced {
    const TAG: SchemeTag = SchemeTag::PriVced;
    rabe_layer_common!();

    fn encrypt<R: Rng + ?Sized>(
        crs: &RabeLayerCrs,
        dir: &RabeDirectory,
        x: &Attribute,
        mu: &BitString,
        rng: &mut R,
    ) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
        check_len(crs.params.message_bits, mu)?;
        privced_encrypt_many(crs, dir, x, mu, rng)
    }

    fn decrypt<R: Rng + ?Sized>(
        sk: &RabeSecretKey,
        hsk: &HelperSecretKey,
        x: &Attribute,
        ct: &mut HybridCiphertext,
        rng: &mut R,
    ) -> DecryptOutcome<BitString> {
        privced_decrypt(sk, hsk, x, ct, rng)
    }

    fn delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
        privced_delete(ct, rng)
    }

    fn verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
        privced_verify(vk, cert)
    }
}

// ---------------------------------------------------------------- PubVCED

pub struct PubVced;

/// RABE plaintext of one PubVCED bit: `(sigk, θ, μ ⊕ ⊕_{θ_i=1} x_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PubvcedPayload {
    pub sigk: SigningKey,
    pub theta: BasisString,
    pub masked: bool,
}

/// Parity of `x` over the positions where `θ_i = 1`.
pub fn pubvced_mask(x: &BitString, theta: &BasisString) -> bool {
    x.parity_where(theta.bits(), true).expect("x and θ have equal length")
}

/// `|ψ⟩ = Σ_ν α_ν |ν⟩|Sign(sigk, ν)⟩` for `|x⟩_θ = Σ_ν α_ν |ν⟩`.
pub fn pubvced_signed_state(x: &BitString, theta: &BasisString, sigk: &SigningKey) -> Result<QReg, ProtocolError> {
    let reg = bb84_prepare(x, theta)?;
    Ok(reg.apply_xor_map(SignOracle::new(sigk.clone()), sig::signature_width(x.len()))?)
}

pub fn pubvced_encrypt<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    mu: bool,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
    pubvced_encrypt_many(crs, dir, x, &BitString::new(vec![mu]), rng)
}

/// Each bit gets its own `(x, θ)`, signature key pair, and RABE ciphertext.
pub fn pubvced_encrypt_many<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
    pubvced_encrypt_with_payloads(crs, dir, x, mu, rng).map(|(vk, ct, _)| (vk, ct))
}

/// As [`pubvced_encrypt_many`], also returning the RABE plaintexts.
pub fn pubvced_encrypt_with_payloads<R: Rng + ?Sized>(
    crs: &RabeLayerCrs,
    dir: &RabeDirectory,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<(VerificationKey, HybridCiphertext, Vec<PubvcedPayload>), ProtocolError> {
    if mu.is_empty() {
        return Err(ProtocolError::LengthMismatch { expected: 1, actual: 0 });
    }
    let lambda = crs.params.lambda;
    let mut vks = Vec::with_capacity(mu.len());
    let mut quantum = Vec::with_capacity(mu.len());
    let mut rabe_cts = Vec::with_capacity(mu.len());
    let mut payloads = Vec::with_capacity(mu.len());
    for b in mu.iter() {
        let xs = BitString::random(lambda, rng);
        let theta = BasisString::random(lambda, rng);
        let kp = sig::sig_gen(lambda, rng);
        quantum.push(pubvced_signed_state(&xs, &theta, &kp.sigk)?);
        let payload = PubvcedPayload { sigk: kp.sigk, theta: theta.clone(), masked: b ^ pubvced_mask(&xs, &theta) };
        let bytes = encoding::canonical_bytes(&payload);
        rabe_cts.push(rabe::encrypt(&crs.rabe, &dir.mpk, &dir.views, x, &bytes, rng)?);
        vks.push(kp.vk);
        payloads.push(payload);
    }
    let ct = HybridCiphertext {
        scheme_tag: SchemeTag::PubVced,
        classical: ClassicalPart::PubVced { rabe: rabe_cts },
        quantum,
        receiver_state: None,
    };
    Ok((VerificationKey::PubVced(vks), ct, payloads))
}

/// Per bit: RABE-decrypt `(sigk, θ, β)`, apply the signing map again to
/// uncompute the signature register, measure the first λ wires in the Hadamard
/// basis, and output `β ⊕ ⊕_{θ_i=1} x̄_i`.
pub fn pubvced_decrypt<R: Rng + ?Sized>(
    sk: &RabeSecretKey,
    hsk: &HelperSecretKey,
    x: &Attribute,
    ct: &mut HybridCiphertext,
    rng: &mut R,
) -> DecryptOutcome<BitString> {
    if expect_tag(SchemeTag::PubVced, ct).is_err() {
        return DecryptOutcome::Reject;
    }
    let ClassicalPart::PubVced { rabe: cts } = &ct.classical else {
        return DecryptOutcome::Reject;
    };
    let payloads: Vec<PubvcedPayload> = match open_payloads(sk, hsk, x, cts) {
        DecryptOutcome::Plaintext(p) => p,
        DecryptOutcome::GetUpdate => return DecryptOutcome::GetUpdate,
        DecryptOutcome::Reject => return DecryptOutcome::Reject,
    };
    let mut out = BitString::zeros(payloads.len());
    for (j, p) in payloads.into_iter().enumerate() {
        let lambda = p.theta.len();
        let width = sig::signature_width(lambda);
        let reg = &ct.quantum[j];
        if p.sigk.msg_bits != lambda || reg.n_wires() != lambda + width {
            return DecryptOutcome::Reject;
        }
        let inputs: Vec<usize> = (0..lambda).collect();
        let outputs: Vec<usize> = (lambda..lambda + width).collect();
        let measured = reg
            .apply_xor_map_on(&inputs, &outputs, SignOracle::new(p.sigk))
            .and_then(|r| r.measure_in_basis(&BasisString::hadamard(lambda), rng));
        let Ok(m) = measured else {
            return DecryptOutcome::Reject;
        };
        out.set(j, p.masked ^ pubvced_mask(&m.outcome, &p.theta));
        ct.quantum[j] = m.post_state;
    }
    DecryptOutcome::Plaintext(out)
}

/// Measures every register in the computational basis; the cert is
/// `(x'_0 ‖ x'_1 ‖ …, σ'_0 ‖ σ'_1 ‖ …)`.
pub fn pubvced_delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
    expect_tag(SchemeTag::PubVced, ct)?;
    let mut message = BitString::default();
    let mut signature = Vec::new();
    for reg in ct.quantum.iter_mut() {
        let n = reg.n_wires();
        let lambda = n / (1 + sig::CHUNK_BYTES * 8);
        if lambda + sig::signature_width(lambda) != n {
            return Err(ProtocolError::Shape(format!("register of {n} wires is not a signed state")));
        }
        let m = reg.measure_computational(rng);
        message = message.concat(&m.outcome.slice(0, lambda));
        signature.extend(Signature::from_bits(&m.outcome.slice(lambda, n)).0);
        *reg = m.post_state;
    }
    Ok(DeletionCert::Signed { message, signature: Signature(signature) })
}

/// `SIG.Verify(vk_j, x'_j, σ'_j)` for every block; uses only public material.
pub fn pubvced_verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    let (VerificationKey::PubVced(vks), DeletionCert::Signed { message, signature }) = (vk, cert) else {
        return false;
    };
    let bits: usize = vks.iter().map(|v| v.msg_bits).sum();
    let bytes: usize = vks.iter().map(|v| v.msg_bits * sig::CHUNK_BYTES).sum();
    if message.len() != bits || signature.0.len() != bytes {
        return false;
    }
    let (mut at_bit, mut at_byte) = (0, 0);
    vks.iter().all(|v| {
        let m = message.slice(at_bit, at_bit + v.msg_bits);
        let s = Signature(signature.0[at_byte..at_byte + v.msg_bits * sig::CHUNK_BYTES].to_vec());
        at_bit += v.msg_bits;
        at_byte += v.msg_bits * sig::CHUNK_BYTES;
        sig::sig_verify(v, &m, &s)
    })
}

impl Scheme for PubVced {
    const TAG: SchemeTag = SchemeTag::PubVced;
    rabe_layer_common!();

    fn encrypt<R: Rng + ?Sized>(
        crs: &RabeLayerCrs,
        dir: &RabeDirectory,
        x: &Attribute,
        mu: &BitString,
        rng: &mut R,
    ) -> Result<(VerificationKey, HybridCiphertext), ProtocolError> {
        check_len(crs.params.message_bits, mu)?;
        pubvced_encrypt_many(crs, dir, x, mu, rng)
    }

    fn decrypt<R: Rng + ?Sized>(
        sk: &RabeSecretKey,
        hsk: &HelperSecretKey,
        x: &Attribute,
        ct: &mut HybridCiphertext,
        rng: &mut R,
    ) -> DecryptOutcome<BitString> {
        pubvced_decrypt(sk, hsk, x, ct, rng)
    }

    fn delete<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
        pubvced_delete(ct, rng)
    }

    fn verify(vk: &VerificationKey, cert: &DeletionCert) -> bool {
        pubvced_verify(vk, cert)
    }
}

/// Decryption dispatched on the ciphertext's scheme tag. A key of the wrong layer gives ⊥.
pub fn decrypt_any<R: Rng + ?Sized>(
    key: &KeyMaterial,
    x: &Attribute,
    ct: &mut HybridCiphertext,
    rng: &mut R,
) -> DecryptOutcome<BitString> {
    match (ct.scheme_tag, key) {
        (SchemeTag::PriVcd, KeyMaterial::Shad { sk, hsk }) => privcd_decrypt(sk, hsk, x, ct, rng),
        (SchemeTag::PubVcd, KeyMaterial::Shad { sk, hsk }) => pubvcd_decrypt(sk, hsk, x, ct),
        (SchemeTag::PriVced, KeyMaterial::Rabe { sk, hsk }) => privced_decrypt(sk, hsk, x, ct, rng),
        (SchemeTag::PubVced, KeyMaterial::Rabe { sk, hsk }) => pubvced_decrypt(sk, hsk, x, ct, rng),
        _ => DecryptOutcome::Reject,
    }
}

/// Deletion dispatched on the ciphertext's scheme tag.
pub fn delete_any<R: Rng + ?Sized>(ct: &mut HybridCiphertext, rng: &mut R) -> Result<DeletionCert, ProtocolError> {
    match ct.scheme_tag {
        SchemeTag::PriVcd => privcd_delete(ct, rng),
        SchemeTag::PubVcd => pubvcd_delete(ct),
        SchemeTag::PriVced => privced_delete(ct, rng),
        SchemeTag::PubVced => pubvced_delete(ct, rng),
    }
}

/// Decrypts only the classical RABE layer of a PriVCED ciphertext.
pub fn privced_open(
    sk: &RabeSecretKey,
    hsk: &HelperSecretKey,
    x: &Attribute,
    ct: &HybridCiphertext,
) -> DecryptOutcome<Vec<PrivcedPayload>> {
    match &ct.classical {
        ClassicalPart::PriVced { rabe } => open_payloads(sk, hsk, x, rabe),
        _ => DecryptOutcome::Reject,
    }
}

/// Decrypts only the classical RABE layer of a PubVCED ciphertext.
pub fn pubvced_open(
    sk: &RabeSecretKey,
    hsk: &HelperSecretKey,
    x: &Attribute,
    ct: &HybridCiphertext,
) -> DecryptOutcome<Vec<PubvcedPayload>> {
    match &ct.classical {
        ClassicalPart::PubVced { rabe } => open_payloads(sk, hsk, x, rabe),
        _ => DecryptOutcome::Reject,
    }
}

fn open_payloads<T: DeserializeOwned>(
    sk: &RabeSecretKey,
    hsk: &HelperSecretKey,
    x: &Attribute,
    cts: &[RabeCiphertext],
) -> DecryptOutcome<Vec<T>> {
    let mut out = Vec::with_capacity(cts.len());
    for c in cts {
        match rabe::decrypt(sk, hsk, x, c) {
            DecryptOutcome::Plaintext(bytes) => match encoding::from_canonical_bytes(&bytes) {
                Ok(p) => out.push(p),
                Err(_) => return DecryptOutcome::Reject,
            },
            DecryptOutcome::GetUpdate => return DecryptOutcome::GetUpdate,
            DecryptOutcome::Reject => return DecryptOutcome::Reject,
        }
    }
    DecryptOutcome::Plaintext(out)
}

/// Verification dispatched on the key's scheme tag.
pub fn verify_any(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    match vk.tag() {
        SchemeTag::PriVcd => privcd_verify(vk, cert),
        SchemeTag::PubVcd => pubvcd_verify(vk, cert),
        SchemeTag::PriVced => privced_verify(vk, cert),
        SchemeTag::PubVced => pubvced_verify(vk, cert),
    }
}
