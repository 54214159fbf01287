//! Decryption and verification correctness games, plus amortized batch
//! runners for lifecycle checks over many random users and attributes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::adversaries::{build_adversary, Adversary, AdversaryKind, Challenge, Query};
use super::{
    digest_hex, random_satisfying, satisfiable_policy, trial_seed, user_id, GameError, GameEvent, GameTranscript,
    SetupInfo,
};
use crate::bits::BitString;
use crate::outcome::DecryptOutcome;
use crate::primitives::DeletionCert;
use crate::protocols::{PriVcd, PriVced, PubVcd, PubVced, Scheme, SchemeParams, SchemeTag};
use crate::rabe::{policy_eval, Attribute, Policy};

/// Fault injection, by encryption index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameHooks {
    /// Tamper with the classical part of this ciphertext before decrypting it.
    pub corrupt_ciphertext: Option<usize>,
    /// Tamper with this certificate before verifying it.
    pub corrupt_cert: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameVerdict {
    /// 1 iff every encryption query came back correct.
    pub b: bool,
    pub encryptions: usize,
    /// Encryptions made at a later epoch than the target's helper key.
    pub epoch_gaps: usize,
    pub updates: usize,
    pub transcript: GameTranscript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Decrypt,
    Verify,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Decrypt => "decryption",
            Check::Verify => "verification",
        }
    }
}

/// Makes a certificate invalid under every key of its shape.
pub fn tamper_cert(cert: &mut DeletionCert) {
    match cert {
        DeletionCert::Bits(bits) => bits.push(false),
        DeletionCert::Signed { signature, .. } => {
            if let Some(b) = signature.0.first_mut() {
                *b ^= 1;
            }
        }
        DeletionCert::OneShot(sig) => sig.0[0] ^= 1,
    }
}

pub fn run_decryption_game(
    scheme: SchemeTag,
    adv: &mut dyn Adversary,
    seed: u64,
    params: &SchemeParams,
    hooks: GameHooks,
) -> Result<GameVerdict, GameError> {
    dispatch(scheme, Check::Decrypt, adv, seed, params, hooks)
}

pub fn run_verification_game(
    scheme: SchemeTag,
    adv: &mut dyn Adversary,
    seed: u64,
    params: &SchemeParams,
    hooks: GameHooks,
) -> Result<GameVerdict, GameError> {
    dispatch(scheme, Check::Verify, adv, seed, params, hooks)
}

fn dispatch(
    scheme: SchemeTag,
    check: Check,
    adv: &mut dyn Adversary,
    seed: u64,
    params: &SchemeParams,
    hooks: GameHooks,
) -> Result<GameVerdict, GameError> {
    match scheme {
        SchemeTag::PriVcd => correctness_game::<PriVcd>(check, adv, seed, params, hooks),
        SchemeTag::PubVcd => correctness_game::<PubVcd>(check, adv, seed, params, hooks),
        SchemeTag::PriVced => correctness_game::<PriVced>(check, adv, seed, params, hooks),
        SchemeTag::PubVced => correctness_game::<PubVced>(check, adv, seed, params, hooks),
    }
}

struct Target<S: Scheme> {
    id: String,
    policy: Policy,
    sk: S::Sk,
    hsk: S::Hsk,
    pk: S::Pk,
}

fn violation(msg: String) -> GameError {
    GameError::AdversaryProtocolViolation(msg)
}

fn correctness_game<S: Scheme>(
    check: Check,
    adv: &mut dyn Adversary,
    seed: u64,
    params: &SchemeParams,
    hooks: GameHooks,
) -> Result<GameVerdict, GameError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t = GameTranscript::new(seed, check.name(), S::TAG.as_str(), adv.name(), None);
    let info = SetupInfo { experiment: check.name().into(), scheme: S::TAG.as_str().into(), params: *params };
    let crs = S::setup(params, &mut rng)?;
    t.push(GameEvent::Setup { crs_digest: digest_hex("games/crs", &crs) });
    adv.on_setup(&info);

    let mut aux = S::new_aux(&crs);
    let mut target: Option<Target<S>> = None;
    let mut registered = 0usize;
    let (mut encryptions, mut epoch_gaps, mut updates) = (0, 0, 0);
    let mut b = true;

    for q in adv.query_phase(&info) {
        match q {
            Query::RegisterTarget { policy } => {
                if target.is_some() {
                    return Err(violation("the target may register only once".into()));
                }
                let (pk, sk) = S::keygen(&crs, Some(&aux), &policy, &mut rng)?;
                aux = S::regpk(&crs, &aux, &pk, &policy)?.1;
                let hsk = S::update(&crs, &aux, &pk)?;
                let id = user_id(registered);
                registered += 1;
                t.dictionary.insert(id.clone(), policy.to_string());
                t.push(GameEvent::RegisterTarget { id: id.clone(), policy: policy.to_string(), epoch: S::epoch(&aux) });
                target = Some(Target { id, policy, sk, hsk, pk });
            }
            Query::RegisterNonTarget { policy } => {
                let (pk, _) = S::keygen(&crs, Some(&aux), &policy, &mut rng)?;
                aux = S::regpk(&crs, &aux, &pk, &policy)?.1;
                let id = user_id(registered);
                registered += 1;
                t.dictionary.insert(id.clone(), policy.to_string());
                t.push(GameEvent::RegisterNonTarget { id, policy: policy.to_string(), epoch: S::epoch(&aux) });
            }
            Query::Encrypt { mu, x } => {
                let tg = target.as_mut().ok_or_else(|| violation("encryption before the target registered".into()))?;
                if mu.len() != params.message_bits {
                    return Err(violation(format!("message has {} bits, expected {}", mu.len(), params.message_bits)));
                }
                if x.len() != params.tau || !policy_eval(&tg.policy, &x)? {
                    return Err(violation(format!("attribute {x} does not satisfy the target policy")));
                }
                let index = encryptions;
                encryptions += 1;
                let epoch = S::epoch(&aux);
                if epoch > S::hsk_epoch(&tg.hsk) {
                    epoch_gaps += 1;
                }
                let dir = S::directory(&crs, &aux);
                let (vk, mut ct) = S::encrypt(&crs, &dir, &x, &mu, &mut rng)?;
                t.push(GameEvent::Encrypt {
                    index,
                    attribute: x.to_string(),
                    message: mu.to_string(),
                    epoch,
                    ct_digest: digest_hex("games/ct", &ct.classical),
                });
                let ok = match check {
                    Check::Decrypt => {
                        if hooks.corrupt_ciphertext == Some(index) {
                            ct.tamper_classical();
                            t.push(GameEvent::Fault { hook: "corrupt_ciphertext".into(), index });
                        }
                        let mut out = S::decrypt(&tg.sk, &tg.hsk, &x, &mut ct, &mut rng);
                        if out.is_get_update() {
                            tg.hsk = S::update(&crs, &aux, &tg.pk)?;
                            updates += 1;
                            t.push(GameEvent::Update { id: tg.id.clone(), epoch: S::hsk_epoch(&tg.hsk) });
                            out = S::decrypt(&tg.sk, &tg.hsk, &x, &mut ct, &mut rng);
                        }
                        let ok = out == DecryptOutcome::Plaintext(mu.clone());
                        t.push(GameEvent::Decrypt { index, outcome: describe(&out) });
                        ok
                    }
                    Check::Verify => {
                        let mut cert = S::delete(&mut ct, &mut rng)?;
                        if hooks.corrupt_cert == Some(index) {
                            tamper_cert(&mut cert);
                            t.push(GameEvent::Fault { hook: "corrupt_cert".into(), index });
                        }
                        let ok = S::verify(&vk, &cert);
                        t.push(GameEvent::Verify { index, accepted: ok });
                        ok
                    }
                };
                if !ok {
                    b = false;
                    break;
                }
            }
            other => return Err(violation(format!("query {other:?} is not available in {}", check.name()))),
        }
    }
    t.b = Some(b);
    t.verdict = Some(format!("b={}", b as u8));
    Ok(GameVerdict { b, encryptions, epoch_gaps, updates, transcript: t })
}

fn describe(out: &DecryptOutcome<BitString>) -> String {
    match out {
        DecryptOutcome::Plaintext(m) => m.to_string(),
        DecryptOutcome::GetUpdate => "get-update".into(),
        DecryptOutcome::Reject => "reject".into(),
    }
}

/// Lifecycle property checked by [`run_lifecycle_batch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifecycleCheck {
    /// `Dec(sk, hsk, x, Enc(x, μ)) = μ`.
    Decrypt,
    /// `Vrfy(vk, Del(ct)) = ⊤`.
    DeleteVerify,
}

/// Many encryptions against one registered population per world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub params: SchemeParams,
    pub users: usize,
    pub runs: usize,
    /// Encryptions sharing one setup and registration.
    pub runs_per_world: usize,
    pub policy_depth: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub scheme: SchemeTag,
    pub runs: usize,
    pub successes: usize,
    pub worlds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionSample {
    pub accepted: bool,
    pub checked_positions: Option<usize>,
}

struct World<S: Scheme> {
    crs: S::Crs,
    dir: S::Directory,
    users: Vec<(Policy, Attribute, S::Sk, S::Hsk)>,
}

fn build_world<S: Scheme>(config: &BatchConfig, rng: &mut ChaCha20Rng) -> Result<World<S>, GameError> {
    let p = &config.params;
    let crs = S::setup(p, rng)?;
    let mut aux = S::new_aux(&crs);
    let mut pending = Vec::with_capacity(config.users);
    for _ in 0..config.users.max(1) {
        let (policy, witness) = satisfiable_policy(p.tau, config.policy_depth, rng);
        let (pk, sk) = S::keygen(&crs, Some(&aux), &policy, rng)?;
        aux = S::regpk(&crs, &aux, &pk, &policy)?.1;
        pending.push((policy, witness, pk, sk));
    }
    let users = pending
        .into_iter()
        .map(|(policy, witness, pk, sk)| Ok((policy, witness, sk, S::update(&crs, &aux, &pk)?)))
        .collect::<Result<_, GameError>>()?;
    Ok(World { dir: S::directory(&crs, &aux), crs, users })
}

/// Runs `f` on every encryption of every world, in order.
fn for_each_run<S: Scheme>(
    config: &BatchConfig,
    mut f: impl FnMut(&World<S>, usize, Attribute, BitString, &mut ChaCha20Rng) -> Result<(), GameError>,
) -> Result<usize, GameError> {
    let per_world = config.runs_per_world.max(1);
    let worlds = config.runs.div_ceil(per_world);
    for w in 0..worlds {
        let mut rng = ChaCha20Rng::seed_from_u64(trial_seed(config.seed, w as u64));
        let world = build_world::<S>(config, &mut rng)?;
        for _ in 0..per_world.min(config.runs - w * per_world) {
            let u = rng.gen_range(0..world.users.len());
            let x = random_satisfying(&world.users[u].0, &world.users[u].1, &mut rng);
            let mu = BitString::random(config.params.message_bits, &mut rng);
            f(&world, u, x, mu, &mut rng)?;
        }
    }
    Ok(worlds)
}

pub fn run_lifecycle_batch(
    scheme: SchemeTag,
    check: LifecycleCheck,
    config: &BatchConfig,
) -> Result<BatchReport, GameError> {
    match scheme {
        SchemeTag::PriVcd => lifecycle_batch::<PriVcd>(check, config),
        SchemeTag::PubVcd => lifecycle_batch::<PubVcd>(check, config),
        SchemeTag::PriVced => lifecycle_batch::<PriVced>(check, config),
        SchemeTag::PubVced => lifecycle_batch::<PubVced>(check, config),
    }
}

fn lifecycle_batch<S: Scheme>(check: LifecycleCheck, config: &BatchConfig) -> Result<BatchReport, GameError> {
    let mut successes = 0;
    let worlds = for_each_run::<S>(config, |world, u, x, mu, rng| {
        let (vk, mut ct) = S::encrypt(&world.crs, &world.dir, &x, &mu, rng)?;
        let ok = match check {
            LifecycleCheck::Decrypt => {
                let (_, _, sk, hsk) = &world.users[u];
                S::decrypt(sk, hsk, &x, &mut ct, rng) == DecryptOutcome::Plaintext(mu)
            }
            LifecycleCheck::DeleteVerify => S::verify(&vk, &S::delete(&mut ct, rng)?),
        };
        successes += ok as usize;
        Ok(())
    })?;
    Ok(BatchReport { scheme: S::TAG, runs: config.runs, successes, worlds })
}

/// Acceptance of certificates produced by `adversary` on fresh ciphertexts.
pub fn run_deletion_batch(
    scheme: SchemeTag,
    adversary: AdversaryKind,
    config: &BatchConfig,
) -> Result<Vec<DeletionSample>, GameError> {
    match scheme {
        SchemeTag::PriVcd => deletion_batch::<PriVcd>(adversary, config),
        SchemeTag::PubVcd => deletion_batch::<PubVcd>(adversary, config),
        SchemeTag::PriVced => deletion_batch::<PriVced>(adversary, config),
        SchemeTag::PubVced => deletion_batch::<PubVced>(adversary, config),
    }
}

fn deletion_batch<S: Scheme>(adversary: AdversaryKind, config: &BatchConfig) -> Result<Vec<DeletionSample>, GameError> {
    let mut out = Vec::with_capacity(config.runs);
    for_each_run::<S>(config, |world, _, x, mu, rng| {
        let (vk, ct) = S::encrypt(&world.crs, &world.dir, &x, &mu, rng)?;
        let mut adv = build_adversary(adversary, rng.gen());
        let public_vk = S::TAG.is_publicly_verifiable().then(|| vk.clone());
        let cert = adv.deletion_phase(Challenge::Hybrid { ct, vk: public_vk, x });
        out.push(DeletionSample {
            accepted: cert.is_some_and(|c| S::verify(&vk, &c)),
            checked_positions: super::checked_positions(&vk),
        });
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::adversaries::QueryMix;

    fn params() -> SchemeParams {
        SchemeParams { lambda: 8, tau: 3, message_bits: 2 }
    }

    #[test]
    fn query_mix_is_correct_for_every_scheme() {
        for scheme in SchemeTag::ALL {
            for check in [Check::Decrypt, Check::Verify] {
                let mut adv = QueryMix::new(3, 12, false);
                let v = dispatch(scheme, check, &mut adv, 5, &params(), GameHooks::default()).unwrap();
                assert!(v.b, "{scheme} {}", check.name());
                assert!(v.encryptions > 0);
            }
        }
    }

    #[test]
    fn epoch_gaps_trigger_one_update_each() {
        for scheme in SchemeTag::ALL {
            let mut adv = QueryMix::new(4, 10, true);
            let v = run_decryption_game(scheme, &mut adv, 6, &params(), GameHooks::default()).unwrap();
            assert!(v.b, "{scheme}");
            assert!(v.epoch_gaps > 0);
            assert_eq!(v.updates, v.epoch_gaps, "{scheme}");
        }
    }

    #[test]
    fn hooks_force_failure() {
        for scheme in SchemeTag::ALL {
            let hooks = GameHooks { corrupt_ciphertext: Some(0), corrupt_cert: None };
            let v = run_decryption_game(scheme, &mut QueryMix::new(1, 6, false), 2, &params(), hooks).unwrap();
            assert!(!v.b, "{scheme} ciphertext hook");
            let hooks = GameHooks { corrupt_ciphertext: None, corrupt_cert: Some(1) };
            let v = run_verification_game(scheme, &mut QueryMix::new(1, 6, false), 2, &params(), hooks).unwrap();
            assert!(!v.b, "{scheme} cert hook");
            assert!(v.transcript.events.iter().any(|e| matches!(e, GameEvent::Fault { index: 1, .. })));
        }
    }

    #[test]
    fn encrypt_before_target_is_a_violation() {
        struct Early;
        impl Adversary for Early {
            fn name(&self) -> &'static str {
                "early"
            }
            fn query_phase(&mut self, info: &SetupInfo) -> Vec<Query> {
                vec![Query::Encrypt {
                    mu: BitString::zeros(info.params.message_bits),
                    x: BitString::zeros(info.params.tau),
                }]
            }
            fn challenge_choice(&mut self, _: &SetupInfo) -> crate::games::ChallengeChoice {
                unreachable!()
            }
            fn deletion_phase(&mut self, _: Challenge) -> Option<DeletionCert> {
                None
            }
            fn guess(&mut self, _: Option<&[crate::games::RevealedKey]>) -> bool {
                false
            }
        }
        let err = run_decryption_game(SchemeTag::PriVcd, &mut Early, 0, &params(), GameHooks::default()).unwrap_err();
        assert!(matches!(err, GameError::AdversaryProtocolViolation(_)));
    }

    #[test]
    fn batches_are_all_correct() {
        let config = BatchConfig { params: params(), users: 3, runs: 10, runs_per_world: 4, policy_depth: 3, seed: 9 };
        for scheme in SchemeTag::ALL {
            for check in [LifecycleCheck::Decrypt, LifecycleCheck::DeleteVerify] {
                let r = run_lifecycle_batch(scheme, check, &config).unwrap();
                assert_eq!((r.successes, r.worlds), (10, 3), "{scheme} {check:?}");
            }
        }
    }

    #[test]
    fn forged_certificates_mostly_fail() {
        let config = BatchConfig { params: params(), users: 2, runs: 20, runs_per_world: 10, policy_depth: 2, seed: 1 };
        for scheme in SchemeTag::ALL {
            let samples = run_deletion_batch(scheme, AdversaryKind::CertForger, &config).unwrap();
            let accepted = samples.iter().filter(|s| s.accepted).count();
            assert!(accepted <= 2, "{scheme}: {accepted}");
        }
    }
}
