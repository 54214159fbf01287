//! Correctness and security experiments, a library of adversary strategies,
//! exact small-instance trace distances, and the estimators used to read them.

pub mod adversaries;
pub mod correctness;
pub mod exact;
pub mod experiments;
pub mod report;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BasisString, BitString};
use crate::encoding::{self, hash_parts};
use crate::primitives::DeletionCert;
use crate::protocols::{ProtocolError, SchemeParams, VerificationKey};
use crate::qstate::QStateError;
use crate::rabe::{policy_eval, Attribute, Policy};
use crate::shad::ShadError;

pub use adversaries::{build_adversary, Adversary, AdversaryKind, Challenge, ChallengeChoice, Query, RevealedKey};
pub use correctness::{run_decryption_game, run_verification_game, GameHooks, GameVerdict};
pub use exact::{exact_residual_td, monte_carlo_td, CedVariant, ExactTd, MeasureStrategy, MonteCarloTd};
pub use experiments::{run_cel_experiment, run_exp_cd, run_exp_ced, run_exp_shad, ExperimentConfig};
pub use report::{run_game, ExperimentKind, GameReport, GameSpec};
pub use stats::{estimate_advantage, rate_check, wilson_interval, AdvantageEstimate, RateCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("adversary protocol violation: {0}")]
    AdversaryProtocolViolation(String),
    #[error(transparent)]
    Admissibility(#[from] AdmissibilityError),
    #[error("invalid game parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Shad(#[from] ShadError),
    #[error(transparent)]
    QState(#[from] QStateError),
}

impl From<crate::rabe::RabeError> for GameError {
    fn from(e: crate::rabe::RabeError) -> Self {
        GameError::Protocol(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("corrupted key {id} has policy {policy}, which accepts the challenge attribute {attribute}")]
pub struct AdmissibilityError {
    pub id: String,
    pub policy: String,
    pub attribute: String,
}

/// `P(X*) = 0` for every policy registered to a corrupted key.
///
/// A policy that cannot be evaluated on `X*` counts as a violation.
pub fn admissibility_check(
    dictionary: &BTreeMap<String, Policy>,
    corrupted: &BTreeSet<String>,
    x: &Attribute,
) -> Result<(), AdmissibilityError> {
    for id in corrupted {
        let Some(policy) = dictionary.get(id) else {
            continue;
        };
        if policy_eval(policy, x).unwrap_or(true) {
            return Err(AdmissibilityError { id: id.clone(), policy: policy.to_string(), attribute: x.to_string() });
        }
    }
    Ok(())
}

/// What the challenger tells the adversary at setup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetupInfo {
    pub experiment: String,
    pub scheme: String,
    pub params: SchemeParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GameEvent {
    Setup { crs_digest: String },
    RegisterHonest { id: String, policy: String, epoch: usize },
    RegisterCorrupted { id: String, policy: String, epoch: usize },
    RegisterTarget { id: String, policy: String, epoch: usize },
    RegisterNonTarget { id: String, policy: String, epoch: usize },
    Corrupt { id: String },
    Update { id: String, epoch: usize },
    Encrypt { index: usize, attribute: String, message: String, epoch: usize, ct_digest: String },
    Decrypt { index: usize, outcome: String },
    Verify { index: usize, accepted: bool },
    Fault { hook: String, index: usize },
    Challenge { attribute: String, messages: Vec<String>, ct_digest: String },
    Certificate { accepted: bool, cert_digest: Option<String> },
    RevealKeys { ids: Vec<String> },
    Guess { bit: bool },
}

/// Replayable record of one game. Equal seeds give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub seed: u64,
    pub experiment: String,
    pub scheme: String,
    pub adversary: String,
    pub b: Option<bool>,
    pub events: Vec<GameEvent>,
    /// `C`
    pub corrupted: BTreeSet<String>,
    /// `H`
    pub honest: BTreeSet<String>,
    /// `D`: key id to registered policy.
    pub dictionary: BTreeMap<String, String>,
    pub keys_revealed: bool,
    pub verdict: Option<String>,
}

impl GameTranscript {
    pub fn new(seed: u64, experiment: &str, scheme: &str, adversary: &str, b: Option<bool>) -> Self {
        Self {
            seed,
            experiment: experiment.into(),
            scheme: scheme.into(),
            adversary: adversary.into(),
            b,
            events: Vec::new(),
            corrupted: BTreeSet::new(),
            honest: BTreeSet::new(),
            dictionary: BTreeMap::new(),
            keys_revealed: false,
            verdict: None,
        }
    }

    pub fn push(&mut self, event: GameEvent) {
        self.events.push(event);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcripts serialize")
    }

    pub fn digest(&self) -> String {
        hex::encode(hash_parts("games/transcript", &[self.to_json().as_bytes()]))
    }
}

/// Deletion-phase view an exact or Monte-Carlo residual check keys on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HandleMode {
    /// The classical component stays an opaque handle.
    Opaque,
    /// An unbounded adversary opens the handle once deletion is over.
    Opened,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "handle", rename_all = "snake_case")]
pub enum HandleView {
    Opaque,
    Opened { theta: BasisString, masked: bool },
}

/// The adversary's classical residual view after an accepted certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualView {
    pub cert: DeletionCert,
    pub handle: HandleView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExperimentOutput {
    Guess(bool),
    /// ⊥: the certificate did not verify.
    Abort,
    Residual(ResidualView),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub b: bool,
    pub output: ExperimentOutput,
    pub trials: usize,
    /// Positions the certificate is checked on, where the scheme has such a notion.
    pub checked_positions: Option<usize>,
    pub transcript: GameTranscript,
}

impl ExperimentResult {
    pub fn is_abort(&self) -> bool {
        self.output == ExperimentOutput::Abort
    }

    /// The output bit, with ⊥ and residual views read as 0.
    pub fn output_bit(&self) -> bool {
        self.output == ExperimentOutput::Guess(true)
    }
}

pub(crate) fn digest_hex<T: Serialize + ?Sized>(domain: &str, value: &T) -> String {
    hex::encode(encoding::digest_of(domain, value))
}

pub(crate) fn user_id(index: usize) -> String {
    format!("u{index:04}")
}

/// Number of positions a PriVCD or PriVCED key checks a certificate on.
pub fn checked_positions(vk: &VerificationKey) -> Option<usize> {
    match vk {
        VerificationKey::PriVcd(sk) => Some(sk.blocks.iter().map(|b| b.theta.hadamard_count()).sum()),
        VerificationKey::PriVced(blocks) => Some(blocks.iter().map(|b| b.theta.hadamard_count()).sum()),
        _ => None,
    }
}

/// Seed for trial `index` of a run seeded with `base`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let d = hash_parts("games/trial-seed", &[&base.to_le_bytes(), &index.to_le_bytes()]);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Runs `f(trial_seed(seed, i), i)` for `i < trials` on up to `jobs` threads; results keep trial order.
pub fn run_trials<T, F>(trials: usize, seed: u64, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return (0..trials).map(|i| f(trial_seed(seed, i as u64), i)).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| (0..trials).into_par_iter().map(|i| f(trial_seed(seed, i as u64), i)).collect())
}

/// A random formula over `tau` attribute bits of depth at most `depth + 1`.
pub fn random_policy<R: Rng + ?Sized>(tau: usize, depth: usize, rng: &mut R) -> Policy {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return Policy::attr(rng.gen_range(0..tau));
    }
    match rng.gen_range(0..3) {
        0 => Policy::not(random_policy(tau, depth - 1, rng)),
        1 => Policy::and(random_policy(tau, depth - 1, rng), random_policy(tau, depth - 1, rng)),
        _ => Policy::or(random_policy(tau, depth - 1, rng), random_policy(tau, depth - 1, rng)),
    }
}

/// A random policy together with one attribute it accepts. A draw that rejects
/// its attribute is negated.
pub fn satisfiable_policy<R: Rng + ?Sized>(tau: usize, depth: usize, rng: &mut R) -> (Policy, Attribute) {
    let p = random_policy(tau, depth, rng);
    let x = BitString::random(tau, rng);
    if policy_eval(&p, &x).expect("attributes cover the policy") {
        (p, x)
    } else {
        (Policy::not(p), x)
    }
}

/// Rejection-samples an accepted attribute, falling back to `witness`.
pub fn random_satisfying<R: Rng + ?Sized>(policy: &Policy, witness: &Attribute, rng: &mut R) -> Attribute {
    for _ in 0..64 {
        let x = BitString::random(witness.len(), rng);
        if policy_eval(policy, &x).unwrap_or(false) {
            return x;
        }
    }
    witness.clone()
}

pub(crate) fn revealed_ids(keys: &[RevealedKey]) -> Vec<String> {
    keys.iter().map(|k| k.id.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn dict(entries: &[(&str, &str)]) -> BTreeMap<String, Policy> {
        entries.iter().map(|(id, p)| (id.to_string(), p.parse().unwrap())).collect()
    }

    #[test]
    fn admissibility_table() {
        let d = dict(&[("a", "x0 & x1"), ("b", "!x0"), ("c", "true")]);
        let x: Attribute = "11".parse().unwrap();
        let cases: [(&[&str], Option<&str>); 3] = [(&["b"], None), (&["a", "b"], Some("a")), (&["c"], Some("c"))];
        for (corrupted, bad) in cases {
            let c: BTreeSet<String> = corrupted.iter().map(|s| s.to_string()).collect();
            assert_eq!(admissibility_check(&d, &c, &x).err().map(|e| e.id), bad.map(String::from));
        }
    }

    #[test]
    fn satisfiable_policies_accept_their_witness() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (p, x) = satisfiable_policy(4, 3, &mut rng);
            assert!(policy_eval(&p, &x).unwrap());
            let y = random_satisfying(&p, &x, &mut rng);
            assert!(policy_eval(&p, &y).unwrap());
        }
    }

    #[test]
    fn trial_seeds_are_distinct_and_ordered() {
        let seeds: BTreeSet<u64> = (0..1000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        let a = run_trials(16, 3, 1, |s, i| (s, i));
        let b = run_trials(16, 3, 4, |s, i| (s, i));
        assert_eq!(a, b);
    }
}
