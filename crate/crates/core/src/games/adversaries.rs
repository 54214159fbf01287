//! Adversary interface and the built-in strategy library.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{random_policy, random_satisfying, satisfiable_policy, GameError, SetupInfo};
use crate::bits::{BasisString, BitString};
use crate::outcome::DecryptOutcome;
use crate::primitives::oss::OssSignature;
use crate::primitives::sig::{self, Signature};
use crate::primitives::DeletionCert;
use crate::protocols::{decrypt_any, delete_any, HybridCiphertext, KeyMaterial, SchemeTag, VerificationKey};
use crate::qstate::{QReg, QStateError};
use crate::rabe::{policy_eval, Attribute, Policy};
use crate::shad::{self, DecCircuit, ShadCiphertext};

/// A request made during the query phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum Query {
    RegisterHonest { policy: Policy },
    RegisterCorrupted { policy: Policy },
    /// Corrupts the `user`-th registration.
    Corrupt { user: usize },
    RegisterTarget { policy: Policy },
    RegisterNonTarget { policy: Policy },
    Encrypt { mu: BitString, x: Attribute },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeChoice {
    pub mu0: BitString,
    pub mu1: BitString,
    pub x: Attribute,
}

/// The challenge, handed over by value: whatever the adversary keeps is its residual state.
#[derive(Debug, Clone)]
pub enum Challenge {
    Hybrid { ct: HybridCiphertext, vk: Option<VerificationKey>, x: Attribute },
    Shad { ct: ShadCiphertext, x: Attribute, mu: BitString },
    /// A BB84 register, with a signature verification key in the public variant.
    Cel { reg: QReg, vk: Option<sig::VerificationKey>, lambda: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealedKey {
    pub id: String,
    pub key: KeyMaterial,
}

/// An adversary strategy. Deterministic given the seed it was built with.
pub trait Adversary {
    fn name(&self) -> &'static str;

    fn on_setup(&mut self, _info: &SetupInfo) {}

    fn query_phase(&mut self, _info: &SetupInfo) -> Vec<Query> {
        Vec::new()
    }

    fn on_corrupted_key(&mut self, _id: &str, _key: KeyMaterial) {}

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice;

    /// Experiments without a deletion phase ignore the return value.
    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert>;

    fn guess(&mut self, revealed: Option<&[RevealedKey]>) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    HonestDeleter,
    ComputationalMeasurer,
    HadamardMeasurer,
    CertForger,
    DecryptFirst,
    ZProber,
    FunctionalConsistency,
    QueryMix,
    EpochGap,
    Fuzz,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 10] = [
        AdversaryKind::HonestDeleter,
        AdversaryKind::ComputationalMeasurer,
        AdversaryKind::HadamardMeasurer,
        AdversaryKind::CertForger,
        AdversaryKind::DecryptFirst,
        AdversaryKind::ZProber,
        AdversaryKind::FunctionalConsistency,
        AdversaryKind::QueryMix,
        AdversaryKind::EpochGap,
        AdversaryKind::Fuzz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdversaryKind::HonestDeleter => "honest-deleter",
            AdversaryKind::ComputationalMeasurer => "computational-measurer",
            AdversaryKind::HadamardMeasurer => "hadamard-measurer",
            AdversaryKind::CertForger => "cert-forger",
            AdversaryKind::DecryptFirst => "decrypt-first",
            AdversaryKind::ZProber => "z-prober",
            AdversaryKind::FunctionalConsistency => "functional-consistency",
            AdversaryKind::QueryMix => "query-mix",
            AdversaryKind::EpochGap => "epoch-gap",
            AdversaryKind::Fuzz => "fuzz",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdversaryKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, GameError> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GameError::Parameter(format!("unknown adversary {s:?}")))
    }
}

pub fn build_adversary(kind: AdversaryKind, seed: u64) -> Box<dyn Adversary + Send> {
    match kind {
        AdversaryKind::HonestDeleter => Box::new(Measurer::new(kind, MeasureBasis::Honest, seed)),
        AdversaryKind::ComputationalMeasurer => Box::new(Measurer::new(kind, MeasureBasis::Computational, seed)),
        AdversaryKind::HadamardMeasurer => Box::new(Measurer::new(kind, MeasureBasis::Hadamard, seed)),
        AdversaryKind::CertForger => Box::new(CertForger::new(seed)),
        AdversaryKind::DecryptFirst => Box::new(DecryptFirst::new(seed)),
        AdversaryKind::ZProber => Box::new(ShadProber::new(kind, seed)),
        AdversaryKind::FunctionalConsistency => Box::new(ShadProber::new(kind, seed)),
        AdversaryKind::QueryMix => Box::new(QueryMix::new(seed, 200, false)),
        AdversaryKind::EpochGap => Box::new(QueryMix::new(seed, 40, true)),
        AdversaryKind::Fuzz => Box::new(Fuzz::new(seed)),
    }
}

/// Basis applied to the message wires of each register; signature wires are
/// always read computationally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureBasis {
    /// Run the scheme's own Delete (computational for the lemma experiment).
    Honest,
    Computational,
    Hadamard,
    Random,
}

/// Message wires of a register of `n` wires: all of them, or the first λ of a signed state.
fn message_wires(n: usize, signed: bool) -> usize {
    if signed {
        n / (1 + sig::CHUNK_BYTES * 8)
    } else {
        n
    }
}

fn measure_register<R: Rng + ?Sized>(
    reg: &mut QReg,
    signed: bool,
    basis: MeasureBasis,
    rng: &mut R,
) -> Result<(BitString, BitString), QStateError> {
    let n = reg.n_wires();
    let lambda = message_wires(n, signed);
    let head = match basis {
        MeasureBasis::Hadamard => BasisString::hadamard(lambda),
        MeasureBasis::Random => BasisString::random(lambda, rng),
        MeasureBasis::Honest | MeasureBasis::Computational => BasisString::computational(lambda),
    };
    let full = BasisString::new(head.into_bits().concat(&BitString::zeros(n - lambda)));
    let m = if full.hadamard_count() == 0 { reg.measure_computational(rng) } else { reg.measure_in_basis(&full, rng)? };
    *reg = m.post_state;
    Ok((m.outcome.slice(0, lambda), m.outcome.slice(lambda, n)))
}

fn cert_from_registers<R: Rng + ?Sized>(
    regs: &mut [QReg],
    signed: bool,
    basis: MeasureBasis,
    rng: &mut R,
) -> Result<DeletionCert, QStateError> {
    let mut message = BitString::default();
    let mut signature = Vec::new();
    for reg in regs.iter_mut() {
        let (m, s) = measure_register(reg, signed, basis, rng)?;
        message = message.concat(&m);
        signature.extend(Signature::from_bits(&s).0);
    }
    Ok(if signed { DeletionCert::Signed { message, signature: Signature(signature) } } else { DeletionCert::Bits(message) })
}

/// Measures every register with `basis`; `Honest` defers to the scheme's Delete.
pub fn measure_hybrid<R: Rng + ?Sized>(
    ct: &mut HybridCiphertext,
    basis: MeasureBasis,
    rng: &mut R,
) -> Option<DeletionCert> {
    if basis == MeasureBasis::Honest || ct.scheme_tag == SchemeTag::PubVcd {
        return delete_any(ct, rng).ok();
    }
    let signed = ct.scheme_tag == SchemeTag::PubVced;
    cert_from_registers(&mut ct.quantum, signed, basis, rng).ok()
}

/// Lemma-experiment deletion: `Honest` is a computational measurement there.
pub fn measure_cel<R: Rng + ?Sized>(
    reg: &mut QReg,
    public: bool,
    basis: MeasureBasis,
    rng: &mut R,
) -> Option<DeletionCert> {
    let basis = if basis == MeasureBasis::Honest { MeasureBasis::Computational } else { basis };
    cert_from_registers(std::slice::from_mut(reg), public, basis, rng).ok()
}

/// A certificate of the right shape with uniformly random content.
pub fn forge_cert<R: Rng + ?Sized>(challenge: &Challenge, rng: &mut R) -> Option<DeletionCert> {
    let random_signed = |regs: &[QReg], rng: &mut R| {
        let mut message = BitString::default();
        let mut signature = Vec::new();
        for reg in regs {
            let lambda = message_wires(reg.n_wires(), true);
            message = message.concat(&BitString::random(lambda, rng));
            signature.extend((0..lambda * sig::CHUNK_BYTES).map(|_| rng.gen::<u8>()));
        }
        DeletionCert::Signed { message, signature: Signature(signature) }
    };
    match challenge {
        Challenge::Hybrid { ct, .. } => Some(match ct.scheme_tag {
            SchemeTag::PubVcd => DeletionCert::OneShot(OssSignature(rng.gen())),
            SchemeTag::PubVced => random_signed(&ct.quantum, rng),
            SchemeTag::PriVcd | SchemeTag::PriVced => {
                DeletionCert::Bits(BitString::random(ct.quantum.iter().map(QReg::n_wires).sum(), rng))
            }
        }),
        Challenge::Cel { reg, vk: Some(_), .. } => Some(random_signed(std::slice::from_ref(reg), rng)),
        Challenge::Cel { lambda, .. } => Some(DeletionCert::Bits(BitString::random(*lambda, rng))),
        Challenge::Shad { .. } => None,
    }
}

/// Queries shared by the deletion adversaries: one honest key that accepts
/// `X*`, one random honest key, one corrupted key that rejects `X*`.
fn admissible_queries(x: &Attribute, tau: usize, rng: &mut ChaCha20Rng) -> Vec<Query> {
    vec![
        Query::RegisterHonest { policy: Policy::exactly(x) },
        Query::RegisterHonest { policy: random_policy(tau, 2, rng) },
        Query::RegisterCorrupted { policy: Policy::not(Policy::exactly(x)) },
    ]
}

/// Guess 1 iff some revealed key decrypts the retained ciphertext to `μ₁`.
fn decrypt_guess(
    retained: &mut Option<HybridCiphertext>,
    x: &Attribute,
    mu1: &BitString,
    revealed: Option<&[RevealedKey]>,
    rng: &mut ChaCha20Rng,
) -> bool {
    let (Some(ct), Some(keys)) = (retained.as_mut(), revealed) else {
        return false;
    };
    for k in keys {
        match decrypt_any(&k.key, x, ct, rng) {
            DecryptOutcome::Plaintext(m) => return m == *mu1,
            DecryptOutcome::GetUpdate | DecryptOutcome::Reject => continue,
        }
    }
    false
}

/// Deletes by measuring, then tries the revealed keys on what is left.
pub struct Measurer {
    kind: AdversaryKind,
    basis: MeasureBasis,
    rng: ChaCha20Rng,
    x: Attribute,
    mu1: BitString,
    retained: Option<HybridCiphertext>,
}

impl Measurer {
    pub fn new(kind: AdversaryKind, basis: MeasureBasis, seed: u64) -> Self {
        Self {
            kind,
            basis,
            rng: ChaCha20Rng::seed_from_u64(seed),
            x: BitString::default(),
            mu1: BitString::default(),
            retained: None,
        }
    }
}

impl Adversary for Measurer {
    fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        self.x = BitString::random(info.params.tau, &mut self.rng);
        admissible_queries(&self.x.clone(), info.params.tau, &mut self.rng)
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        let n = info.params.message_bits;
        self.mu1 = BitString::ones(n);
        ChallengeChoice { mu0: BitString::zeros(n), mu1: self.mu1.clone(), x: self.x.clone() }
    }

    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert> {
        match challenge {
            Challenge::Hybrid { mut ct, .. } => {
                let cert = measure_hybrid(&mut ct, self.basis, &mut self.rng);
                self.retained = Some(ct);
                cert
            }
            Challenge::Cel { mut reg, vk, .. } => measure_cel(&mut reg, vk.is_some(), self.basis, &mut self.rng),
            Challenge::Shad { .. } => None,
        }
    }

    fn guess(&mut self, revealed: Option<&[RevealedKey]>) -> bool {
        decrypt_guess(&mut self.retained, &self.x, &self.mu1, revealed, &mut self.rng)
    }
}

/// Sends a random certificate of the right shape.
pub struct CertForger {
    inner: Measurer,
}

impl CertForger {
    pub fn new(seed: u64) -> Self {
        Self { inner: Measurer::new(AdversaryKind::CertForger, MeasureBasis::Honest, seed) }
    }
}

impl Adversary for CertForger {
    fn name(&self) -> &'static str {
        AdversaryKind::CertForger.as_str()
    }

    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        self.inner.query_phase(info)
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        self.inner.challenge_choice(info)
    }

    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert> {
        let cert = forge_cert(&challenge, &mut self.inner.rng);
        if let Challenge::Hybrid { ct, .. } = challenge {
            self.inner.retained = Some(ct);
        }
        cert
    }

    fn guess(&mut self, revealed: Option<&[RevealedKey]>) -> bool {
        self.inner.guess(revealed)
    }
}

/// Corrupts a key that accepts `X*`, decrypts the challenge, then deletes.
pub struct DecryptFirst {
    inner: Measurer,
    corrupted: Option<KeyMaterial>,
    decrypted: Option<BitString>,
}

impl DecryptFirst {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Measurer::new(AdversaryKind::DecryptFirst, MeasureBasis::Honest, seed),
            corrupted: None,
            decrypted: None,
        }
    }
}

impl Adversary for DecryptFirst {
    fn name(&self) -> &'static str {
        AdversaryKind::DecryptFirst.as_str()
    }

    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        self.inner.x = BitString::random(info.params.tau, &mut self.inner.rng);
        vec![
            Query::RegisterHonest { policy: Policy::exactly(&self.inner.x) },
            Query::RegisterCorrupted { policy: Policy::Const(true) },
        ]
    }

    fn on_corrupted_key(&mut self, _id: &str, key: KeyMaterial) {
        self.corrupted = Some(key);
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        self.inner.challenge_choice(info)
    }

    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert> {
        match challenge {
            Challenge::Hybrid { mut ct, x, .. } => {
                if let Some(key) = &self.corrupted {
                    self.decrypted = decrypt_any(key, &x, &mut ct, &mut self.inner.rng).plaintext();
                }
                let cert = delete_any(&mut ct, &mut self.inner.rng).ok();
                self.inner.retained = Some(ct);
                cert
            }
            other => self.inner.deletion_phase(other),
        }
    }

    fn guess(&mut self, _revealed: Option<&[RevealedKey]>) -> bool {
        self.decrypted.as_ref() == Some(&self.inner.mu1)
    }
}

/// Shad-experiment strategies: reading the selector out of revealed keys, or
/// checking that every revealed key opens `ct*` to `μ`.
pub struct ShadProber {
    kind: AdversaryKind,
    rng: ChaCha20Rng,
    x: Attribute,
    challenge: Option<(ShadCiphertext, BitString)>,
    /// Set by `guess` for the consistency strategy.
    pub consistent: Option<bool>,
}

impl ShadProber {
    pub fn new(kind: AdversaryKind, seed: u64) -> Self {
        Self { kind, rng: ChaCha20Rng::seed_from_u64(seed), x: BitString::default(), challenge: None, consistent: None }
    }
}

/// The selector hardcoded in an identity-obfuscated decryption program.
pub fn read_selector(sk: &shad::ShadSk) -> Option<BitString> {
    crate::encoding::from_canonical_bytes::<DecCircuit>(sk.encoded()).ok().and_then(|c| c.selector)
}

impl Adversary for ShadProber {
    fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        self.x = BitString::random(info.params.tau, &mut self.rng);
        vec![
            Query::RegisterHonest { policy: Policy::exactly(&self.x) },
            Query::RegisterHonest { policy: Policy::Const(true) },
            Query::RegisterCorrupted { policy: Policy::not(Policy::exactly(&self.x)) },
        ]
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        let mu = BitString::random(info.params.message_bits, &mut self.rng);
        ChallengeChoice { mu0: mu.clone(), mu1: mu, x: self.x.clone() }
    }

    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert> {
        if let Challenge::Shad { ct, mu, .. } = challenge {
            self.challenge = Some((ct, mu));
        }
        None
    }

    fn guess(&mut self, revealed: Option<&[RevealedKey]>) -> bool {
        let keys = revealed.unwrap_or(&[]);
        match self.kind {
            AdversaryKind::ZProber => {
                let selector = keys.iter().find_map(|k| match &k.key {
                    KeyMaterial::Shad { sk, .. } => read_selector(sk),
                    KeyMaterial::Rabe { .. } => None,
                });
                match selector {
                    Some(z) if !z.is_empty() => z[0],
                    _ => self.rng.gen(),
                }
            }
            _ => {
                let Some((ct, mu)) = &self.challenge else {
                    return true;
                };
                let ok = !keys.is_empty()
                    && keys.iter().all(|k| match &k.key {
                        KeyMaterial::Shad { sk, hsk } => {
                            sk.eval(shad::DecInput { hsk, x: &self.x, ct }) == DecryptOutcome::Plaintext(mu.clone())
                        }
                        KeyMaterial::Rabe { .. } => false,
                    });
                self.consistent = Some(ok);
                !ok
            }
        }
    }
}

/// Query generator for the decryption and verification games.
///
/// With `force_gaps`, a non-target registration precedes every encryption
/// query, so each one lands one epoch past the target's helper key.
pub struct QueryMix {
    rng: ChaCha20Rng,
    queries: usize,
    force_gaps: bool,
}

impl QueryMix {
    pub fn new(seed: u64, queries: usize, force_gaps: bool) -> Self {
        Self { rng: ChaCha20Rng::seed_from_u64(seed), queries, force_gaps }
    }
}

impl Adversary for QueryMix {
    fn name(&self) -> &'static str {
        if self.force_gaps {
            AdversaryKind::EpochGap.as_str()
        } else {
            AdversaryKind::QueryMix.as_str()
        }
    }

    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        let tau = info.params.tau;
        let (target, witness) = satisfiable_policy(tau, 3, &mut self.rng);
        let mut out = vec![Query::RegisterTarget { policy: target.clone() }];
        while out.len() < self.queries {
            if self.force_gaps || self.rng.gen_ratio(1, 5) {
                out.push(Query::RegisterNonTarget { policy: random_policy(tau, 3, &mut self.rng) });
            }
            let x = random_satisfying(&target, &witness, &mut self.rng);
            out.push(Query::Encrypt { mu: BitString::random(info.params.message_bits, &mut self.rng), x });
        }
        out.truncate(self.queries.max(1));
        out
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        let n = info.params.message_bits;
        ChallengeChoice { mu0: BitString::zeros(n), mu1: BitString::ones(n), x: BitString::zeros(info.params.tau) }
    }

    fn deletion_phase(&mut self, _challenge: Challenge) -> Option<DeletionCert> {
        None
    }

    fn guess(&mut self, _revealed: Option<&[RevealedKey]>) -> bool {
        false
    }
}

/// Random queries, random challenge, and a random choice among honest
/// deletion, random-basis measurement, and a forged certificate.
pub struct Fuzz {
    rng: ChaCha20Rng,
    retained: Option<HybridCiphertext>,
    x: Attribute,
    mu1: BitString,
}

impl Fuzz {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            retained: None,
            x: BitString::default(),
            mu1: BitString::default(),
        }
    }
}

impl Adversary for Fuzz {
    fn name(&self) -> &'static str {
        AdversaryKind::Fuzz.as_str()
    }

    /// Corruptions are kept admissible: the challenge attribute is fixed first
    /// and only keys whose policy rejects it are corrupted.
    fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
        let tau = info.params.tau;
        self.x = BitString::random(tau, &mut self.rng);
        let rejects = |p: &Policy, x: &Attribute| !policy_eval(p, x).unwrap_or(true);
        let mut policies: Vec<Policy> = Vec::new();
        let mut out = Vec::new();
        for _ in 0..self.rng.gen_range(0..5) {
            let policy = random_policy(tau, 3, &mut self.rng);
            match self.rng.gen_range(0..3) {
                0 if !policies.is_empty() => {
                    let user = self.rng.gen_range(0..policies.len());
                    if rejects(&policies[user], &self.x) {
                        out.push(Query::Corrupt { user });
                    }
                }
                1 => {
                    let policy = Policy::and(policy, Policy::not(Policy::exactly(&self.x)));
                    policies.push(policy.clone());
                    out.push(Query::RegisterCorrupted { policy });
                }
                _ => {
                    policies.push(policy.clone());
                    out.push(Query::RegisterHonest { policy });
                }
            }
        }
        out
    }

    fn challenge_choice(&mut self, info: &SetupInfo) -> ChallengeChoice {
        let n = info.params.message_bits;
        self.mu1 = BitString::random(n, &mut self.rng);
        ChallengeChoice { mu0: BitString::random(n, &mut self.rng), mu1: self.mu1.clone(), x: self.x.clone() }
    }

    fn deletion_phase(&mut self, challenge: Challenge) -> Option<DeletionCert> {
        let choice = self.rng.gen_range(0..3);
        if choice == 2 {
            return forge_cert(&challenge, &mut self.rng);
        }
        let basis = if choice == 0 { MeasureBasis::Honest } else { MeasureBasis::Random };
        match challenge {
            Challenge::Hybrid { mut ct, .. } => {
                let cert = measure_hybrid(&mut ct, basis, &mut self.rng);
                self.retained = Some(ct);
                cert
            }
            Challenge::Cel { mut reg, vk, .. } => measure_cel(&mut reg, vk.is_some(), basis, &mut self.rng),
            Challenge::Shad { .. } => None,
        }
    }

    fn guess(&mut self, revealed: Option<&[RevealedKey]>) -> bool {
        if self.rng.gen() {
            decrypt_guess(&mut self.retained, &self.x, &self.mu1, revealed, &mut self.rng)
        } else {
            self.rng.gen()
        }
    }
}
