//! Registered key-policy ABE over a Merkle-authenticated slot directory.
//!
//! Users generate their own PKE keys and register `(pk, P)` with a curator,
//! which appends a slot and publishes the new root as the master public key.
//! Encryption reads the public directory (checked against the root) and
//! produces one PKE entry per slot whose policy accepts the attribute, so
//! ciphertexts grow linearly with the number of satisfied slots.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::encoding::{self, canonical_bytes, hash_parts, Digest};
use crate::outcome::DecryptOutcome;
use crate::primitives::pke::{self, PkeError, PkePublicKey, PkeRandomness, PkeSecretKey};

pub const DEFAULT_MAX_POLICY_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RabeError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("policy depth {depth} exceeds bound {max}")]
    PolicyTooDeep { depth: usize, max: usize },
    #[error("attribute width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("malformed public key")]
    MalformedKey,
    #[error("directory view does not match the master public key")]
    StaleView,
    #[error("public key not registered")]
    NotRegistered,
    #[error("object belongs to a different CRS")]
    CrsMismatch,
    #[error("policy parse error: {0}")]
    PolicyParse(String),
    #[error("directory import error: {0}")]
    Import(String),
    #[error(transparent)]
    Pke(#[from] PkeError),
}

pub type Attribute = BitString;

/// Boolean formula over attribute bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Const(bool),
    Attr(usize),
    Not(Box<Policy>),
    And(Box<Policy>, Box<Policy>),
    Or(Box<Policy>, Box<Policy>),
}

impl Policy {
    pub fn attr(i: usize) -> Self {
        Policy::Attr(i)
    }

    pub fn not(p: Policy) -> Self {
        Policy::Not(Box::new(p))
    }

    pub fn and(a: Policy, b: Policy) -> Self {
        Policy::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Policy, b: Policy) -> Self {
        Policy::Or(Box::new(a), Box::new(b))
    }

    /// Conjunction of literals fixing every bit to the given attribute.
    pub fn exactly(x: &Attribute) -> Self {
        x.iter()
            .enumerate()
            .map(|(i, b)| if b { Policy::attr(i) } else { Policy::not(Policy::attr(i)) })
            .reduce(Policy::and)
            .unwrap_or(Policy::Const(true))
    }

    pub fn depth(&self) -> usize {
        match self {
            Policy::Const(_) | Policy::Attr(_) => 1,
            Policy::Not(p) => 1 + p.depth(),
            Policy::And(a, b) | Policy::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn max_attr(&self) -> Option<usize> {
        match self {
            Policy::Const(_) => None,
            Policy::Attr(i) => Some(*i),
            Policy::Not(p) => p.max_attr(),
            Policy::And(a, b) | Policy::Or(a, b) => a.max_attr().max(b.max_attr()),
        }
    }

    fn eval_unchecked(&self, x: &Attribute) -> bool {
        match self {
            Policy::Const(b) => *b,
            Policy::Attr(i) => x[*i],
            Policy::Not(p) => !p.eval_unchecked(x),
            Policy::And(a, b) => a.eval_unchecked(x) && b.eval_unchecked(x),
            Policy::Or(a, b) => a.eval_unchecked(x) || b.eval_unchecked(x),
        }
    }
}

/// Evaluates `P(X)`. Fails if the policy reads a bit beyond the attribute width.
pub fn policy_eval(p: &Policy, x: &Attribute) -> Result<bool, RabeError> {
    if let Some(i) = p.max_attr() {
        if i >= x.len() {
            return Err(RabeError::WidthMismatch { expected: i + 1, actual: x.len() });
        }
    }
    Ok(p.eval_unchecked(x))
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Const(b) => write!(f, "{b}"),
            Policy::Attr(i) => write!(f, "x{i}"),
            Policy::Not(p) => write!(f, "!{p}"),
            Policy::And(a, b) => write!(f, "({a} & {b})"),
            Policy::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

/// Grammar: `or := and ('|' and)*`, `and := unary ('&' unary)*`,
/// `unary := '!' unary | 'true' | 'false' | 'x'N | '(' or ')'`.
impl FromStr for Policy {
    type Err = RabeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = tokenize(s)?;
        let mut pos = 0;
        let p = parse_or(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(RabeError::PolicyParse(format!("unexpected token {:?}", tokens[pos])));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    And,
    Or,
    Not,
    Open,
    Close,
    Const(bool),
    Attr(usize),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, RabeError> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => {}
            '&' => out.push(Tok::And),
            '|' => out.push(Tok::Or),
            '!' => out.push(Tok::Not),
            '(' => out.push(Tok::Open),
            ')' => out.push(Tok::Close),
            'x' => {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let n: String = chars[start..end].iter().collect();
                let idx = n.parse().map_err(|_| RabeError::PolicyParse(format!("bad attribute index at {i}")))?;
                out.push(Tok::Attr(idx));
                i = end;
                continue;
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.as_str() {
                    "true" => out.push(Tok::Const(true)),
                    "false" => out.push(Tok::Const(false)),
                    _ => return Err(RabeError::PolicyParse(format!("unknown word {word:?}"))),
                }
                continue;
            }
            _ => return Err(RabeError::PolicyParse(format!("unexpected character {c:?}"))),
        }
        i += 1;
    }
    Ok(out)
}

fn parse_or(t: &[Tok], pos: &mut usize) -> Result<Policy, RabeError> {
    let mut p = parse_and(t, pos)?;
    while t.get(*pos) == Some(&Tok::Or) {
        *pos += 1;
        p = Policy::or(p, parse_and(t, pos)?);
    }
    Ok(p)
}

fn parse_and(t: &[Tok], pos: &mut usize) -> Result<Policy, RabeError> {
    let mut p = parse_unary(t, pos)?;
    while t.get(*pos) == Some(&Tok::And) {
        *pos += 1;
        p = Policy::and(p, parse_unary(t, pos)?);
    }
    Ok(p)
}

fn parse_unary(t: &[Tok], pos: &mut usize) -> Result<Policy, RabeError> {
    let tok = t.get(*pos).cloned().ok_or_else(|| RabeError::PolicyParse("unexpected end".into()))?;
    *pos += 1;
    match tok {
        Tok::Not => Ok(Policy::not(parse_unary(t, pos)?)),
        Tok::Const(b) => Ok(Policy::Const(b)),
        Tok::Attr(i) => Ok(Policy::Attr(i)),
        Tok::Open => {
            let p = parse_or(t, pos)?;
            if t.get(*pos) != Some(&Tok::Close) {
                return Err(RabeError::PolicyParse("missing ')'".into()));
            }
            *pos += 1;
            Ok(p)
        }
        other => Err(RabeError::PolicyParse(format!("unexpected token {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crs {
    pub lambda: usize,
    /// Attribute width; also the universe size parameter.
    pub tau: usize,
    pub max_policy_depth: usize,
    pub hash_name: String,
    #[serde(with = "encoding::hex_bytes")]
    pub hash_params: Vec<u8>,
}

impl Crs {
    pub fn digest(&self) -> Digest {
        encoding::digest_of("rabe/crs", self)
    }
}

pub fn setup<R: Rng + ?Sized>(lambda: usize, tau: usize, rng: &mut R) -> Result<Crs, RabeError> {
    if lambda == 0 || tau == 0 {
        return Err(RabeError::Parameter(format!("lambda = {lambda}, tau = {tau}; both must be positive")));
    }
    let salt: [u8; 32] = rng.gen();
    Ok(Crs {
        lambda,
        tau,
        max_policy_depth: DEFAULT_MAX_POLICY_DEPTH,
        hash_name: "sha256".into(),
        hash_params: salt.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RabePublicKey {
    pub pke: PkePublicKey,
    /// Commitment to the policy given at key generation. Registration does not
    /// enforce it, since one key may be registered under several policies.
    #[serde(with = "encoding::hex_digest")]
    pub policy_commitment: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RabeSecretKey {
    pub pk: RabePublicKey,
    pub pke: PkeSecretKey,
    #[serde(with = "encoding::hex_digest")]
    pub crs_digest: Digest,
}

/// `aux` is unused by the reference and may be `None`.
pub fn keygen<R: Rng + ?Sized>(
    crs: &Crs,
    _aux: Option<&AuxState>,
    policy: &Policy,
    rng: &mut R,
) -> Result<(RabePublicKey, RabeSecretKey), RabeError> {
    check_policy(crs, policy)?;
    let kp = pke::pke_keygen(rng);
    let pk = RabePublicKey { pke: kp.pk, policy_commitment: encoding::digest_of("rabe/policy", policy) };
    let sk = RabeSecretKey { pk: pk.clone(), pke: kp.sk, crs_digest: crs.digest() };
    Ok((pk, sk))
}

fn check_policy(crs: &Crs, policy: &Policy) -> Result<(), RabeError> {
    let depth = policy.depth();
    if depth > crs.max_policy_depth {
        return Err(RabeError::PolicyTooDeep { depth, max: crs.max_policy_depth });
    }
    if let Some(i) = policy.max_attr() {
        if i >= crs.tau {
            return Err(RabeError::WidthMismatch { expected: crs.tau, actual: i + 1 });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub pk: RabePublicKey,
    pub policy: Policy,
}

fn leaf_hash(crs_digest: &Digest, index: usize, slot: &Slot) -> Digest {
    hash_parts(
        "rabe/leaf",
        &[crs_digest, &(index as u64).to_le_bytes(), &canonical_bytes(&slot.pk), &canonical_bytes(&slot.policy)],
    )
}

fn node_hash(crs_digest: &Digest, left: &Digest, right: &Digest) -> Digest {
    hash_parts("rabe/node", &[crs_digest, left, right])
}

fn pad_hash(crs_digest: &Digest) -> Digest {
    hash_parts("rabe/pad", &[crs_digest])
}

fn empty_root(crs_digest: &Digest) -> Digest {
    hash_parts("rabe/empty", &[crs_digest])
}

/// All tree levels, leaves first, padded to a power of two.
fn tree_levels(crs_digest: &Digest, leaves: &[Digest]) -> Vec<Vec<Digest>> {
    let width = leaves.len().next_power_of_two();
    let mut level = leaves.to_vec();
    level.resize(width, pad_hash(crs_digest));
    let mut levels = vec![level];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        levels.push(prev.chunks(2).map(|c| node_hash(crs_digest, &c[0], &c[1])).collect());
    }
    levels
}

fn merkle_root(crs_digest: &Digest, leaves: &[Digest]) -> Digest {
    if leaves.is_empty() {
        return empty_root(crs_digest);
    }
    tree_levels(crs_digest, leaves).last().unwrap()[0]
}

/// Checks `path` for leaf `index` in a tree of `n_leaves` leaves against `root`.
pub fn verify_merkle_path(
    crs_digest: &Digest,
    leaf: &Digest,
    index: usize,
    n_leaves: usize,
    path: &[Digest],
    root: &Digest,
) -> bool {
    if index >= n_leaves || path.len() != ceil_log2(n_leaves) {
        return false;
    }
    let mut acc = *leaf;
    let mut i = index;
    for sib in path {
        acc = if i % 2 == 0 { node_hash(crs_digest, &acc, sib) } else { node_hash(crs_digest, sib, &acc) };
        i /= 2;
    }
    acc == *root
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Curator state. Registration returns a new value and leaves the old one intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxState {
    #[serde(with = "encoding::hex_digest")]
    pub crs_digest: Digest,
    pub slots: Vec<Slot>,
    #[serde(with = "encoding::hex_digest_vec")]
    leaves: Vec<Digest>,
    /// `historical_roots[e]` is the root after `e` registrations.
    #[serde(with = "encoding::hex_digest_vec")]
    pub historical_roots: Vec<Digest>,
}

impl AuxState {
    pub fn new(crs: &Crs) -> Self {
        let d = crs.digest();
        Self { crs_digest: d, slots: Vec::new(), leaves: Vec::new(), historical_roots: vec![empty_root(&d)] }
    }

    pub fn epoch(&self) -> usize {
        self.slots.len()
    }

    pub fn merkle_root(&self) -> Digest {
        *self.historical_roots.last().expect("epoch-0 root always present")
    }

    pub fn mpk(&self) -> MasterPublicKey {
        MasterPublicKey { merkle_root: self.merkle_root(), epoch: self.epoch(), crs_digest: self.crs_digest }
    }

    pub fn view(&self) -> DirectoryView {
        DirectoryView { crs_digest: self.crs_digest, slots: self.slots.clone(), root: self.merkle_root() }
    }

    /// One JSON object per line: `{"index", "pk", "policy"}` with `pk` as canonical hex.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.slots.iter().enumerate() {
            let line = serde_json::json!({
                "index": i,
                "pk": hex::encode(canonical_bytes(&s.pk)),
                "policy": s.policy,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    /// Rebuilds curator state from an exported directory, replaying registrations.
    pub fn import_jsonl(crs: &Crs, text: &str) -> Result<Self, RabeError> {
        let mut aux = AuxState::new(crs);
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            #[derive(Deserialize)]
            struct Line {
                index: usize,
                pk: String,
                policy: Policy,
            }
            let l: Line = serde_json::from_str(line).map_err(|e| RabeError::Import(format!("line {}: {e}", lineno + 1)))?;
            if l.index != aux.epoch() {
                return Err(RabeError::Import(format!("line {}: index {} out of order", lineno + 1, l.index)));
            }
            let bytes = hex::decode(&l.pk).map_err(|e| RabeError::Import(e.to_string()))?;
            let pk: RabePublicKey =
                encoding::from_canonical_bytes(&bytes).map_err(|e| RabeError::Import(e.to_string()))?;
            aux = regpk(crs, &aux, &pk, &l.policy)?.1;
        }
        Ok(aux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MasterPublicKey {
    #[serde(with = "encoding::hex_digest")]
    pub merkle_root: Digest,
    pub epoch: usize,
    #[serde(with = "encoding::hex_digest")]
    pub crs_digest: Digest,
}

/// The public slot directory an encryptor reads. The root is computed once here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectoryView {
    #[serde(with = "encoding::hex_digest")]
    pub crs_digest: Digest,
    pub slots: Vec<Slot>,
    #[serde(with = "encoding::hex_digest")]
    root: Digest,
}

impl DirectoryView {
    pub fn new(crs: &Crs, slots: Vec<Slot>) -> Self {
        let d = crs.digest();
        let leaves: Vec<Digest> = slots.iter().enumerate().map(|(i, s)| leaf_hash(&d, i, s)).collect();
        let root = merkle_root(&d, &leaves);
        Self { crs_digest: d, slots, root }
    }

    pub fn root(&self) -> Digest {
        self.root
    }

    pub fn epoch(&self) -> usize {
        self.slots.len()
    }

    fn check(&self, mpk: &MasterPublicKey) -> Result<(), RabeError> {
        if self.crs_digest != mpk.crs_digest {
            return Err(RabeError::CrsMismatch);
        }
        if self.root != mpk.merkle_root || self.slots.len() != mpk.epoch {
            return Err(RabeError::StaleView);
        }
        Ok(())
    }
}

pub fn regpk(
    crs: &Crs,
    aux: &AuxState,
    pk: &RabePublicKey,
    policy: &Policy,
) -> Result<(MasterPublicKey, AuxState), RabeError> {
    if aux.crs_digest != crs.digest() {
        return Err(RabeError::CrsMismatch);
    }
    if pk.pke.0 == 0 || pk.pke.0 >= pke::MODULUS {
        return Err(RabeError::MalformedKey);
    }
    check_policy(crs, policy)?;
    let mut next = aux.clone();
    let slot = Slot { pk: pk.clone(), policy: policy.clone() };
    next.leaves.push(leaf_hash(&aux.crs_digest, aux.epoch(), &slot));
    next.slots.push(slot);
    next.historical_roots.push(merkle_root(&next.crs_digest, &next.leaves));
    Ok((next.mpk(), next))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotPath {
    pub slot_index: usize,
    pub policy: Policy,
    #[serde(with = "encoding::hex_digest_vec")]
    pub merkle_path: Vec<Digest>,
}

/// Helper key: one authenticated path per slot registered to the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HelperSecretKey {
    pub epoch: usize,
    pub slots: Vec<SlotPath>,
}

/// Deterministic: the same `(aux, pk)` always yields the same helper key.
pub fn update(crs: &Crs, aux: &AuxState, pk: &RabePublicKey) -> Result<HelperSecretKey, RabeError> {
    if aux.crs_digest != crs.digest() {
        return Err(RabeError::CrsMismatch);
    }
    let mine: Vec<usize> = (0..aux.epoch()).filter(|&i| aux.slots[i].pk == *pk).collect();
    if mine.is_empty() {
        return Err(RabeError::NotRegistered);
    }
    let levels = tree_levels(&aux.crs_digest, &aux.leaves);
    let slots = mine
        .into_iter()
        .map(|idx| {
            let mut path = Vec::with_capacity(levels.len() - 1);
            let mut i = idx;
            for level in &levels[..levels.len() - 1] {
                path.push(level[i ^ 1]);
                i /= 2;
            }
            SlotPath { slot_index: idx, policy: aux.slots[idx].policy.clone(), merkle_path: path }
        })
        .collect();
    Ok(HelperSecretKey { epoch: aux.epoch(), slots })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RabeEntry {
    pub slot_index: usize,
    #[serde(with = "encoding::hex_bytes")]
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RabeCiphertext {
    pub epoch: usize,
    #[serde(with = "encoding::hex_digest")]
    pub root_binding: Digest,
    #[serde(with = "encoding::hex_digest")]
    pub crs_digest: Digest,
    pub entries: Vec<RabeEntry>,
}

fn slot_randomness(r: &PkeRandomness, slot_index: usize) -> PkeRandomness {
    hash_parts("rabe/slot-randomness", &[r, &(slot_index as u64).to_le_bytes()])
}

pub fn encrypt<R: Rng + ?Sized>(
    crs: &Crs,
    mpk: &MasterPublicKey,
    view: &DirectoryView,
    x: &Attribute,
    m: &[u8],
    rng: &mut R,
) -> Result<RabeCiphertext, RabeError> {
    let r: PkeRandomness = rng.gen();
    encrypt_with_randomness(crs, mpk, view, x, m, &r)
}

/// Deterministic encryption under explicit randomness `r`.
pub fn encrypt_with_randomness(
    crs: &Crs,
    mpk: &MasterPublicKey,
    view: &DirectoryView,
    x: &Attribute,
    m: &[u8],
    r: &PkeRandomness,
) -> Result<RabeCiphertext, RabeError> {
    if x.len() != crs.tau {
        return Err(RabeError::WidthMismatch { expected: crs.tau, actual: x.len() });
    }
    if mpk.crs_digest != crs.digest() {
        return Err(RabeError::CrsMismatch);
    }
    view.check(mpk)?;
    let mut entries = Vec::new();
    for (i, slot) in view.slots.iter().enumerate() {
        if policy_eval(&slot.policy, x)? {
            let body = pke::pke_encrypt(&slot.pk.pke, m, &slot_randomness(r, i))?;
            entries.push(RabeEntry { slot_index: i, body });
        }
    }
    Ok(RabeCiphertext { epoch: mpk.epoch, root_binding: mpk.merkle_root, crs_digest: mpk.crs_digest, entries })
}

pub fn decrypt(sk: &RabeSecretKey, hsk: &HelperSecretKey, x: &Attribute, ct: &RabeCiphertext) -> DecryptOutcome<Vec<u8>> {
    if hsk.epoch < ct.epoch {
        return DecryptOutcome::GetUpdate;
    }
    if sk.crs_digest != ct.crs_digest {
        return DecryptOutcome::Reject;
    }
    for sp in &hsk.slots {
        if sp.slot_index >= ct.epoch || !matches!(policy_eval(&sp.policy, x), Ok(true)) {
            continue;
        }
        if hsk.epoch == ct.epoch {
            let leaf = leaf_hash(&sk.crs_digest, sp.slot_index, &Slot { pk: sk.pk.clone(), policy: sp.policy.clone() });
            if !verify_merkle_path(&sk.crs_digest, &leaf, sp.slot_index, ct.epoch, &sp.merkle_path, &ct.root_binding) {
                continue;
            }
        }
        if let Some(entry) = ct.entries.iter().find(|e| e.slot_index == sp.slot_index) {
            if let Some(m) = pke::pke_decrypt(&sk.pke, &entry.body) {
                return DecryptOutcome::Plaintext(m);
            }
        }
    }
    DecryptOutcome::Reject
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn setup_deterministic_and_rejects_zero() {
        let a = setup(32, 8, &mut rng(1)).unwrap();
        let b = setup(32, 8, &mut rng(1)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(setup(32, 0, &mut rng(1)), Err(RabeError::Parameter(_))));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<Crs>(&json).unwrap(), a);
    }

    #[test]
    fn keygen_distinct_and_round_trips() {
        let crs = setup(32, 4, &mut rng(1)).unwrap();
        let (pk1, _) = keygen(&crs, None, &Policy::Const(true), &mut rng(2)).unwrap();
        let (pk2, _) = keygen(&crs, None, &Policy::Const(true), &mut rng(3)).unwrap();
        assert_ne!(pk1, pk2);
        let bytes = canonical_bytes(&pk1);
        assert_eq!(encoding::from_canonical_bytes::<RabePublicKey>(&bytes).unwrap(), pk1);
    }

    #[test]
    fn deep_policy_rejected() {
        let crs = setup(32, 4, &mut rng(1)).unwrap();
        let mut p = Policy::attr(0);
        for _ in 0..DEFAULT_MAX_POLICY_DEPTH {
            p = Policy::not(p);
        }
        assert!(matches!(keygen(&crs, None, &p, &mut rng(2)), Err(RabeError::PolicyTooDeep { .. })));
    }

    #[test]
    fn four_users_paths_of_length_two() {
        let crs = setup(32, 4, &mut rng(1)).unwrap();
        let mut aux = AuxState::new(&crs);
        let mut pks = Vec::new();
        let mut r = rng(2);
        for _ in 0..4 {
            let (pk, _) = keygen(&crs, Some(&aux), &Policy::Const(true), &mut r).unwrap();
            let before = aux.clone();
            let (mpk, next) = regpk(&crs, &aux, &pk, &Policy::Const(true)).unwrap();
            assert_eq!(before, aux);
            assert_eq!(mpk.epoch, next.epoch());
            aux = next;
            pks.push(pk);
        }
        assert_eq!(aux.epoch(), 4);
        for pk in &pks {
            let hsk = update(&crs, &aux, pk).unwrap();
            assert_eq!(hsk.slots[0].merkle_path.len(), 2);
        }
    }

    #[test]
    fn multi_registration() {
        let crs = setup(32, 4, &mut rng(1)).unwrap();
        let aux = AuxState::new(&crs);
        let (pk, _) = keygen(&crs, None, &Policy::Const(true), &mut rng(2)).unwrap();
        let (_, aux) = regpk(&crs, &aux, &pk, &Policy::attr(0)).unwrap();
        let (_, aux) = regpk(&crs, &aux, &pk, &Policy::attr(1)).unwrap();
        let hsk = update(&crs, &aux, &pk).unwrap();
        assert_eq!(hsk.slots.iter().map(|s| s.slot_index).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn update_errors_and_determinism() {
        let crs = setup(32, 4, &mut rng(1)).unwrap();
        let aux = AuxState::new(&crs);
        let (pk, _) = keygen(&crs, None, &Policy::Const(true), &mut rng(2)).unwrap();
        assert_eq!(update(&crs, &aux, &pk), Err(RabeError::NotRegistered));
        let (_, aux) = regpk(&crs, &aux, &pk, &Policy::Const(true)).unwrap();
        assert_eq!(update(&crs, &aux, &pk).unwrap(), update(&crs, &aux, &pk).unwrap());
    }

    #[test]
    fn stale_view_rejected() {
        let crs = setup(32, 2, &mut rng(1)).unwrap();
        let aux0 = AuxState::new(&crs);
        let (pk, _) = keygen(&crs, None, &Policy::Const(true), &mut rng(2)).unwrap();
        let (mpk, _aux1) = regpk(&crs, &aux0, &pk, &Policy::Const(true)).unwrap();
        let err = encrypt(&crs, &mpk, &aux0.view(), &BitString::zeros(2), b"m", &mut rng(3)).unwrap_err();
        assert_eq!(err, RabeError::StaleView);
    }

    #[test]
    fn get_update_then_decrypt() {
        let crs = setup(32, 2, &mut rng(1)).unwrap();
        let mut r = rng(2);
        let aux = AuxState::new(&crs);
        let (pk1, sk1) = keygen(&crs, None, &Policy::Const(true), &mut r).unwrap();
        let (_, aux) = regpk(&crs, &aux, &pk1, &Policy::Const(true)).unwrap();
        let hsk1 = update(&crs, &aux, &pk1).unwrap();
        let x = BitString::zeros(2);
        let ct1 = encrypt(&crs, &aux.mpk(), &aux.view(), &x, b"one", &mut r).unwrap();
        let mut aux = aux;
        for _ in 0..2 {
            let (pk, _) = keygen(&crs, None, &Policy::Const(true), &mut r).unwrap();
            aux = regpk(&crs, &aux, &pk, &Policy::Const(true)).unwrap().1;
        }
        // an epoch-1 key still opens the epoch-1 ciphertext
        assert_eq!(decrypt(&sk1, &hsk1, &x, &ct1), DecryptOutcome::Plaintext(b"one".to_vec()));
        let ct3 = encrypt(&crs, &aux.mpk(), &aux.view(), &x, b"three", &mut r).unwrap();
        assert_eq!(decrypt(&sk1, &hsk1, &x, &ct3), DecryptOutcome::GetUpdate);
        let hsk3 = update(&crs, &aux, &pk1).unwrap();
        assert_eq!(decrypt(&sk1, &hsk3, &x, &ct3), DecryptOutcome::Plaintext(b"three".to_vec()));
    }

    #[test]
    fn unsatisfied_policy_and_empty_entries() {
        let crs = setup(32, 2, &mut rng(1)).unwrap();
        let mut r = rng(2);
        let (pk, sk) = keygen(&crs, None, &Policy::attr(0), &mut r).unwrap();
        let (_, aux) = regpk(&crs, &AuxState::new(&crs), &pk, &Policy::attr(0)).unwrap();
        let hsk = update(&crs, &aux, &pk).unwrap();
        let x: BitString = "01".parse().unwrap();
        let ct = encrypt(&crs, &aux.mpk(), &aux.view(), &x, b"m", &mut r).unwrap();
        assert!(ct.entries.is_empty());
        assert_eq!(decrypt(&sk, &hsk, &x, &ct), DecryptOutcome::Reject);
    }

    #[test]
    fn corrupted_path_rejected() {
        let crs = setup(32, 2, &mut rng(1)).unwrap();
        let mut r = rng(2);
        let mut aux = AuxState::new(&crs);
        let mut keys = Vec::new();
        for _ in 0..5 {
            let (pk, sk) = keygen(&crs, None, &Policy::Const(true), &mut r).unwrap();
            aux = regpk(&crs, &aux, &pk, &Policy::Const(true)).unwrap().1;
            keys.push((pk, sk));
        }
        let (pk, sk) = &keys[2];
        let hsk = update(&crs, &aux, pk).unwrap();
        assert_eq!(hsk.slots[0].merkle_path.len(), 3);
        let x = BitString::zeros(2);
        let ct = encrypt(&crs, &aux.mpk(), &aux.view(), &x, b"m", &mut r).unwrap();
        assert!(decrypt(sk, &hsk, &x, &ct).plaintext().is_some());
        for k in 0..3 {
            let mut bad = hsk.clone();
            bad.slots[0].merkle_path[k][0] ^= 1;
            assert_eq!(decrypt(sk, &bad, &x, &ct), DecryptOutcome::Reject);
        }
    }

    #[test]
    fn policy_parse_display() {
        let p: Policy = "x0 & !x3 | true".parse().unwrap();
        assert_eq!(p, Policy::or(Policy::and(Policy::attr(0), Policy::not(Policy::attr(3))), Policy::Const(true)));
        assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        assert!("x0 &".parse::<Policy>().is_err());
        assert!("(x0".parse::<Policy>().is_err());
    }

    #[test]
    fn policy_eval_examples() {
        let one: BitString = "1000".parse().unwrap();
        let zero = BitString::zeros(4);
        assert!(policy_eval(&Policy::Const(true), &zero).unwrap());
        assert!(policy_eval(&Policy::attr(0), &one).unwrap());
        assert!(!policy_eval(&Policy::attr(0), &zero).unwrap());
        assert!(matches!(policy_eval(&Policy::attr(4), &zero), Err(RabeError::WidthMismatch { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let crs = setup(32, 3, &mut rng(1)).unwrap();
        let mut r = rng(2);
        let mut aux = AuxState::new(&crs);
        for i in 0..3 {
            let (pk, _) = keygen(&crs, None, &Policy::attr(i), &mut r).unwrap();
            aux = regpk(&crs, &aux, &pk, &Policy::attr(i)).unwrap().1;
        }
        let text = aux.export_jsonl();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(AuxState::import_jsonl(&crs, &text).unwrap(), aux);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!([1, 2, 3, 4, 5, 1024, 1025].map(ceil_log2), [0, 1, 2, 2, 3, 10, 11]);
    }
}
