//! Shadow RABE: `2·ℓ_m` parallel RABE instances with an obfuscated decryption
//! circuit, plus the simulation algorithms that let a simulated ciphertext be
//! opened to any message.
//!
//! Instance `(i, b)` carries bit `i` of the message in slot `b`. An honest
//! ciphertext encrypts `μ[i]` in both slots and carries a proof that it does; a
//! user key is the obfuscation of a circuit that checks the proof and then
//! decrypts slot `z[i]` for a secret selector `z`.

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::encoding::{self, digest_of, Digest};
use crate::outcome::DecryptOutcome;
use crate::primitives::io::{io_obfuscate, Circuit, IoError, ObfuscatedProgram};
use crate::primitives::pke::PkeRandomness;
use crate::primitives::zka::{self, ProofObject, Relation, ZkaError};
use crate::rabe::{
    self, Attribute, AuxState, Crs, DirectoryView, HelperSecretKey, MasterPublicKey, Policy, RabeCiphertext,
    RabeError, RabePublicKey, RabeSecretKey,
};

pub const DEFAULT_MESSAGE_BITS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShadError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid has {actual} rows, expected {expected}")]
    Shape { expected: usize, actual: usize },
    #[error("message has {actual} bits, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("public key not in the simulator dictionary")]
    UnknownKey,
    #[error("simulator dictionary is empty")]
    EmptyDictionary,
    #[error(transparent)]
    Rabe(#[from] RabeError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Zka(#[from] ZkaError),
}

/// `grid[i][b]` for message bit `i` and slot `b`.
pub type Grid<T> = Vec<[T; 2]>;

fn grid_map<T, U, E>(g: &[[T; 2]], mut f: impl FnMut(usize, usize, &T) -> Result<U, E>) -> Result<Grid<U>, E> {
    g.iter()
        .enumerate()
        .map(|(i, pair)| Ok([f(i, 0, &pair[0])?, f(i, 1, &pair[1])?]))
        .collect()
}

fn check_rows(expected: usize, actual: usize) -> Result<(), ShadError> {
    if expected != actual {
        return Err(ShadError::Shape { expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadCrs {
    pub message_bits: usize,
    pub sub: Grid<Crs>,
    #[serde(with = "encoding::hex_digest")]
    pub y: [u8; 32],
}

impl ShadCrs {
    pub fn lambda(&self) -> usize {
        self.sub[0][0].lambda
    }

    pub fn tau(&self) -> usize {
        self.sub[0][0].tau
    }

    pub fn crs_digests(&self) -> Grid<Digest> {
        self.sub.iter().map(|p| [p[0].digest(), p[1].digest()]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShadPk {
    pub grid: Grid<RabePublicKey>,
}

impl ShadPk {
    pub fn digest(&self) -> Digest {
        digest_of("shad/pk", self)
    }

    fn key(&self) -> String {
        hex::encode(self.digest())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadAux {
    pub grid: Grid<AuxState>,
}

impl ShadAux {
    pub fn new(crs: &ShadCrs) -> Self {
        Self { grid: crs.sub.iter().map(|p| [AuxState::new(&p[0]), AuxState::new(&p[1])]).collect() }
    }

    pub fn epoch(&self) -> usize {
        self.grid[0][0].epoch()
    }

    pub fn mpk(&self, crs: &ShadCrs) -> ShadMpk {
        ShadMpk { grid: self.grid.iter().map(|p| [p[0].mpk(), p[1].mpk()]).collect(), y: crs.y }
    }

    pub fn views(&self) -> ShadViews {
        ShadViews { grid: self.grid.iter().map(|p| [p[0].view(), p[1].view()]).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadMpk {
    pub grid: Grid<MasterPublicKey>,
    #[serde(with = "encoding::hex_digest")]
    pub y: [u8; 32],
}

impl ShadMpk {
    pub fn epoch(&self) -> usize {
        self.grid[0][0].epoch
    }
}

/// Public directories of every instance, read by encryptors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadViews {
    pub grid: Grid<DirectoryView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShadHsk {
    pub grid: Grid<HelperSecretKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadCiphertext {
    pub grid: Grid<RabeCiphertext>,
    pub pi: ProofObject,
}

/// The statement `d = ({mpk_{i,b}, CT_{i,b}}, X)`.
///
/// `mpk_{i,b}` is rebuilt from the root and epoch each sub-ciphertext is bound to,
/// so the decryption circuit can reconstruct `d` from its input.
#[derive(Debug, Serialize)]
pub struct ShadStatement<'a> {
    pub mpk: Grid<MasterPublicKey>,
    pub ct: &'a [[RabeCiphertext; 2]],
    pub x: &'a Attribute,
}

impl<'a> ShadStatement<'a> {
    pub fn from_ciphertexts(crs_digests: &[[Digest; 2]], ct: &'a [[RabeCiphertext; 2]], x: &'a Attribute) -> Self {
        let mpk = ct
            .iter()
            .zip(crs_digests)
            .map(|(pair, d)| {
                [0, 1].map(|b| MasterPublicKey {
                    merkle_root: pair[b].root_binding,
                    epoch: pair[b].epoch,
                    crs_digest: d[b],
                })
            })
            .collect();
        Self { mpk, ct, x }
    }
}

/// Witness `(μ, {r_{i,b}})`.
#[derive(Debug, Clone)]
pub struct ShadWitness {
    pub mu: BitString,
    pub r: Grid<PkeRandomness>,
}

/// Relation R: every `CT_{i,b}` re-encrypts from `(mpk_{i,b}, X, μ[i]; r_{i,b})`.
pub struct ShadRelation<'a> {
    pub crs: &'a ShadCrs,
    pub views: &'a ShadViews,
}

pub const STATEMENT_DOMAIN: &str = "shad/statement";

impl<'a> Relation for ShadRelation<'a> {
    type Statement = ShadStatement<'a>;
    type Witness = ShadWitness;

    fn domain(&self) -> &'static str {
        STATEMENT_DOMAIN
    }

    fn holds(&self, d: &ShadStatement<'a>, w: &ShadWitness) -> bool {
        relation_check(self.crs, self.views, d, w)
    }
}

fn bit_plaintext(b: bool) -> [u8; 1] {
    [b as u8]
}

pub fn relation_check(crs: &ShadCrs, views: &ShadViews, d: &ShadStatement<'_>, w: &ShadWitness) -> bool {
    let n = crs.message_bits;
    if d.ct.len() != n || d.mpk.len() != n || w.mu.len() != n || w.r.len() != n || views.grid.len() != n {
        return false;
    }
    (0..n).all(|i| {
        (0..2).all(|b| {
            rabe::encrypt_with_randomness(
                &crs.sub[i][b],
                &d.mpk[i][b],
                &views.grid[i][b],
                d.x,
                &bit_plaintext(w.mu[i]),
                &w.r[i][b],
            )
            .is_ok_and(|ct| ct == d.ct[i][b])
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecVariant {
    /// Decrypts slot `(i, z[i])`.
    LeftOrRight,
    /// Decrypts slot `(i, 0)`.
    LeftOnly,
}

/// One step of the decryption program, run in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecOp {
    /// Output ⊥ unless π verifies for the statement rebuilt from the input.
    CheckProof,
    /// `m[i] ← RABE.Decrypt(sk_i, hsk_{i,slot}, X, CT_{i,slot})`, where `sk_i` is hardcoded key `i`.
    DecryptBit { i: usize, slot: usize },
    /// Output `m`.
    Emit,
}

/// The decryption circuit: hardcoded keys, optional selector, and an op list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecCircuit {
    pub variant: DecVariant,
    pub keys: Vec<RabeSecretKey>,
    pub selector: Option<BitString>,
    pub crs_digests: Grid<Digest>,
    #[serde(with = "encoding::hex_digest")]
    pub y: [u8; 32],
    pub program: Vec<DecOp>,
}

impl DecCircuit {
    /// Fig. 1: `D[{sk_{i,z[i]}}, z]`.
    pub fn left_or_right(crs: &ShadCrs, keys: Vec<RabeSecretKey>, z: BitString) -> Self {
        let mut program = vec![DecOp::CheckProof];
        program.extend((0..z.len()).map(|i| DecOp::DecryptBit { i, slot: z[i] as usize }));
        program.push(DecOp::Emit);
        Self {
            variant: DecVariant::LeftOrRight,
            keys,
            selector: Some(z),
            crs_digests: crs.crs_digests(),
            y: crs.y,
            program,
        }
    }

    /// Fig. 2: `D₀[{sk_{i,0}}]`.
    pub fn left_only(crs: &ShadCrs, keys: Vec<RabeSecretKey>) -> Self {
        let mut program = vec![DecOp::CheckProof];
        program.extend((0..keys.len()).map(|i| DecOp::DecryptBit { i, slot: 0 }));
        program.push(DecOp::Emit);
        Self { variant: DecVariant::LeftOnly, keys, selector: None, crs_digests: crs.crs_digests(), y: crs.y, program }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecInput<'a> {
    pub hsk: &'a ShadHsk,
    pub x: &'a Attribute,
    pub ct: &'a ShadCiphertext,
}

impl Circuit for DecCircuit {
    type Input<'a> = DecInput<'a>;
    type Output = DecryptOutcome<BitString>;

    fn eval(&self, input: DecInput<'_>) -> DecryptOutcome<BitString> {
        let n = self.keys.len();
        if input.ct.grid.len() != n || input.hsk.grid.len() != n || self.crs_digests.len() != n {
            return DecryptOutcome::Reject;
        }
        let mut m = BitString::zeros(n);
        for op in &self.program {
            match *op {
                DecOp::CheckProof => {
                    let d = ShadStatement::from_ciphertexts(&self.crs_digests, &input.ct.grid, input.x);
                    if !zka::verify_digest(&digest_of(STATEMENT_DOMAIN, &d), &input.ct.pi, &self.y) {
                        return DecryptOutcome::Reject;
                    }
                }
                DecOp::DecryptBit { i, slot } => {
                    let sub = rabe::decrypt(&self.keys[i], &input.hsk.grid[i][slot], input.x, &input.ct.grid[i][slot]);
                    match sub {
                        DecryptOutcome::Plaintext(bytes) if bytes == [0] => m.set(i, false),
                        DecryptOutcome::Plaintext(bytes) if bytes == [1] => m.set(i, true),
                        DecryptOutcome::GetUpdate => return DecryptOutcome::GetUpdate,
                        _ => return DecryptOutcome::Reject,
                    }
                }
                DecOp::Emit => return DecryptOutcome::Plaintext(m),
            }
        }
        DecryptOutcome::Reject
    }
}

pub type ShadSk = ObfuscatedProgram<DecCircuit>;

pub fn setup<R: Rng + ?Sized>(lambda: usize, tau: usize, message_bits: usize, rng: &mut R) -> Result<ShadCrs, ShadError> {
    if message_bits == 0 {
        return Err(ShadError::Parameter("message length must be positive".into()));
    }
    let mut sub = Vec::with_capacity(message_bits);
    for _ in 0..message_bits {
        sub.push([rabe::setup(lambda, tau, rng)?, rabe::setup(lambda, tau, rng)?]);
    }
    Ok(ShadCrs { message_bits, sub, y: rng.gen() })
}

/// Sub-keys in `(i, 0), (i, 1)` order. Shared by `keygen` and `sim_keygen`.
fn key_grid<R: Rng + ?Sized>(
    crs: &ShadCrs,
    aux: Option<&ShadAux>,
    policy: &Policy,
    rng: &mut R,
) -> Result<(ShadPk, Grid<RabeSecretKey>), ShadError> {
    if let Some(a) = aux {
        check_rows(crs.message_bits, a.grid.len())?;
    }
    let mut pks = Vec::with_capacity(crs.message_bits);
    let mut sks = Vec::with_capacity(crs.message_bits);
    for i in 0..crs.message_bits {
        let (pk0, sk0) = rabe::keygen(&crs.sub[i][0], aux.map(|a| &a.grid[i][0]), policy, rng)?;
        let (pk1, sk1) = rabe::keygen(&crs.sub[i][1], aux.map(|a| &a.grid[i][1]), policy, rng)?;
        pks.push([pk0, pk1]);
        sks.push([sk0, sk1]);
    }
    Ok((ShadPk { grid: pks }, sks))
}

/// `aux = None` is the empty directory.
pub fn keygen<R: Rng + ?Sized>(
    crs: &ShadCrs,
    aux: Option<&ShadAux>,
    policy: &Policy,
    rng: &mut R,
) -> Result<(ShadPk, ShadSk), ShadError> {
    let (pk, sks) = key_grid(crs, aux, policy, rng)?;
    let z = BitString::random(crs.message_bits, rng);
    let keys = sks.into_iter().enumerate().map(|(i, [k0, k1])| if z[i] { k1 } else { k0 }).collect();
    Ok((pk, io_obfuscate(DecCircuit::left_or_right(crs, keys, z))?))
}

pub fn regpk(crs: &ShadCrs, aux: &ShadAux, pk: &ShadPk, policy: &Policy) -> Result<(ShadMpk, ShadAux), ShadError> {
    check_rows(crs.message_bits, aux.grid.len())?;
    check_rows(crs.message_bits, pk.grid.len())?;
    let grid = grid_map(&aux.grid, |i, b, a| rabe::regpk(&crs.sub[i][b], a, &pk.grid[i][b], policy).map(|r| r.1))?;
    let next = ShadAux { grid };
    Ok((next.mpk(crs), next))
}

pub fn update(crs: &ShadCrs, aux: &ShadAux, pk: &ShadPk) -> Result<ShadHsk, ShadError> {
    check_rows(crs.message_bits, aux.grid.len())?;
    check_rows(crs.message_bits, pk.grid.len())?;
    Ok(ShadHsk { grid: grid_map(&aux.grid, |i, b, a| rabe::update(&crs.sub[i][b], a, &pk.grid[i][b]))? })
}

fn draw_randomness<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Grid<PkeRandomness> {
    (0..n).map(|_| [rng.gen(), rng.gen()]).collect()
}

/// Encrypts `plain[i][b]` into instance `(i, b)` under explicit randomness.
fn encrypt_grid(
    crs: &ShadCrs,
    mpk: &ShadMpk,
    views: &ShadViews,
    x: &Attribute,
    plain: &[[bool; 2]],
    r: &[[PkeRandomness; 2]],
) -> Result<Grid<RabeCiphertext>, ShadError> {
    check_rows(crs.message_bits, mpk.grid.len())?;
    check_rows(crs.message_bits, views.grid.len())?;
    Ok(grid_map(plain, |i, b, &bit| {
        rabe::encrypt_with_randomness(&crs.sub[i][b], &mpk.grid[i][b], &views.grid[i][b], x, &bit_plaintext(bit), &r[i][b])
    })?)
}

pub fn encrypt<R: Rng + ?Sized>(
    crs: &ShadCrs,
    mpk: &ShadMpk,
    views: &ShadViews,
    x: &Attribute,
    mu: &BitString,
    rng: &mut R,
) -> Result<ShadCiphertext, ShadError> {
    if mu.len() != crs.message_bits {
        return Err(ShadError::LengthMismatch { expected: crs.message_bits, actual: mu.len() });
    }
    let r = draw_randomness(crs.message_bits, rng);
    let plain: Vec<[bool; 2]> = mu.iter().map(|b| [b, b]).collect();
    let grid = encrypt_grid(crs, mpk, views, x, &plain, &r)?;
    let digests = crs.crs_digests();
    let d = ShadStatement::from_ciphertexts(&digests, &grid, x);
    // The grid was just encrypted from (μ, r), so R(d, (μ, r)) holds.
    let pi = zka::zka_prove_constructed(&ShadRelation { crs, views }, &d, &mpk.y);
    Ok(ShadCiphertext { grid, pi })
}

pub fn decrypt(sk: &ShadSk, hsk: &ShadHsk, x: &Attribute, ct: &ShadCiphertext) -> DecryptOutcome<BitString> {
    sk.eval(DecInput { hsk, x, ct })
}

/// Simulator bookkeeping for one simulated key: all `2·ℓ_m` secret keys and `z*_pk`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEntry {
    pub pk: ShadPk,
    pub keys: Grid<RabeSecretKey>,
    pub z_star: BitString,
}

/// The dictionary B, keyed by public-key digest in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimDictionary {
    entries: IndexMap<String, SimEntry>,
}

impl SimDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, pk: &ShadPk) -> Option<&SimEntry> {
        self.entries.get(&pk.key())
    }

    pub fn entries(&self) -> impl Iterator<Item = &SimEntry> {
        self.entries.values()
    }

    /// `z* = ⊕_{pk ∈ B} z*_pk`, folded in insertion order.
    pub fn aggregate_selector(&self) -> Result<BitString, ShadError> {
        let mut it = self.entries.values();
        let first = it.next().ok_or(ShadError::EmptyDictionary)?.z_star.clone();
        it.try_fold(first, |acc, e| {
            acc.xor(&e.z_star)
                .map_err(|_| ShadError::LengthMismatch { expected: acc.len(), actual: e.z_star.len() })
        })
    }
}

pub fn sim_keygen<R: Rng + ?Sized>(
    crs: &ShadCrs,
    aux: Option<&ShadAux>,
    policy: &Policy,
    dict: &mut SimDictionary,
    rng: &mut R,
) -> Result<ShadPk, ShadError> {
    let (pk, keys) = key_grid(crs, aux, policy, rng)?;
    let z_star = BitString::random(crs.message_bits, rng);
    dict.entries.insert(pk.key(), SimEntry { pk: pk.clone(), keys, z_star });
    Ok(pk)
}

/// Identical to [`regpk`]; `B` is accepted and not read.
pub fn sim_regpk(
    crs: &ShadCrs,
    aux: &ShadAux,
    pk: &ShadPk,
    policy: &Policy,
    _dict: &SimDictionary,
) -> Result<(ShadMpk, ShadAux), ShadError> {
    regpk(crs, aux, pk, policy)
}

pub fn sim_corrupt(crs: &ShadCrs, pk: &ShadPk, dict: &SimDictionary) -> Result<ShadSk, ShadError> {
    let entry = dict.get(pk).ok_or(ShadError::UnknownKey)?;
    let keys = entry.keys.iter().map(|pair| pair[0].clone()).collect();
    Ok(io_obfuscate(DecCircuit::left_only(crs, keys))?)
}

/// Encrypts `values[i]` at slot `selector[i]` and its complement at the other slot,
/// with a simulated proof. Randomness is drawn before plaintexts are assigned.
fn asymmetric_ciphertext<R: Rng + ?Sized>(
    crs: &ShadCrs,
    mpk: &ShadMpk,
    views: &ShadViews,
    x: &Attribute,
    selector: &BitString,
    values: &BitString,
    rng: &mut R,
) -> Result<ShadCiphertext, ShadError> {
    let n = crs.message_bits;
    for len in [selector.len(), values.len()] {
        if len != n {
            return Err(ShadError::LengthMismatch { expected: n, actual: len });
        }
    }
    let r = draw_randomness(n, rng);
    let plain: Vec<[bool; 2]> = (0..n)
        .map(|i| {
            let mut pair = [!values[i]; 2];
            pair[selector[i] as usize] = values[i];
            pair
        })
        .collect();
    let grid = encrypt_grid(crs, mpk, views, x, &plain, &r)?;
    let digests = crs.crs_digests();
    let d = ShadStatement::from_ciphertexts(&digests, &grid, x);
    let pi = zka::zka_simulate(&ShadRelation { crs, views }, &d, &mpk.y);
    Ok(ShadCiphertext { grid, pi })
}

/// Slot `z*[i]` encrypts 0 and slot `1 − z*[i]` encrypts 1.
pub fn sim_ct<R: Rng + ?Sized>(
    crs: &ShadCrs,
    mpk: &ShadMpk,
    views: &ShadViews,
    dict: &SimDictionary,
    x: &Attribute,
    rng: &mut R,
) -> Result<ShadCiphertext, ShadError> {
    let z_star = dict.aggregate_selector()?;
    asymmetric_ciphertext(crs, mpk, views, x, &z_star, &BitString::zeros(crs.message_bits), rng)
}

/// Key for `pk` that opens a simulated ciphertext to `mu`: selector `z* ⊕ μ`.
///
/// `z*` is the aggregate over all of `B`, the same value `sim_ct` used.
pub fn reveal(
    crs: &ShadCrs,
    pk: &ShadPk,
    dict: &SimDictionary,
    ct: &ShadCiphertext,
    mu: &BitString,
) -> Result<ShadSk, ShadError> {
    let entry = dict.get(pk).ok_or(ShadError::UnknownKey)?;
    for len in [mu.len(), ct.grid.len()] {
        if len != crs.message_bits {
            return Err(ShadError::LengthMismatch { expected: crs.message_bits, actual: len });
        }
    }
    let z = dict.aggregate_selector()?.xor(mu).expect("lengths checked");
    let keys = entry.keys.iter().enumerate().map(|(i, pair)| pair[z[i] as usize].clone()).collect();
    Ok(io_obfuscate(DecCircuit::left_or_right(crs, keys, z))?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HybridVariant {
    /// Slot `z[i]` encrypts `μ[i]`, slot `1 − z[i]` encrypts `1 − μ[i]`.
    Hyb3 { z: BitString },
    /// Fixed values under `z*`: the same as [`sim_ct`].
    Hyb4,
}

pub fn hybrid_ciphertext<R: Rng + ?Sized>(
    crs: &ShadCrs,
    mpk: &ShadMpk,
    views: &ShadViews,
    dict: &SimDictionary,
    x: &Attribute,
    mu: &BitString,
    variant: &HybridVariant,
    rng: &mut R,
) -> Result<ShadCiphertext, ShadError> {
    if dict.is_empty() {
        return Err(ShadError::EmptyDictionary);
    }
    match variant {
        HybridVariant::Hyb3 { z } => asymmetric_ciphertext(crs, mpk, views, x, z, mu, rng),
        HybridVariant::Hyb4 => sim_ct(crs, mpk, views, dict, x, rng),
    }
}
