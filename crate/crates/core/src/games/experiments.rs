//! The certified-deletion, certified-everlasting-deletion, Shad-RABE, and
//! lemma-level experiments.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::adversaries::{Adversary, Challenge, ChallengeChoice, Query, RevealedKey};
use super::exact::CedVariant;
use super::{
    admissibility_check, checked_positions, digest_hex, revealed_ids, user_id, ExperimentOutput, ExperimentResult,
    GameError, GameEvent, GameTranscript, HandleMode, HandleView, ResidualView, SetupInfo,
};
use crate::bits::{BasisString, BitString};
use crate::primitives::sig;
use crate::primitives::DeletionCert;
use crate::protocols::{
    privced_encrypt_with_payloads, pubvced_encrypt_with_payloads, pubvced_signed_state, KeyMaterial, PriVcd,
    PriVced, PubVcd, PubVced, RabeDirectory, RabeLayerCrs, Scheme, SchemeParams, SchemeTag,
};
use crate::qstate::bb84_prepare;
use crate::rabe::Policy;
use crate::shad::{self, ShadAux, ShadPk, ShadSk, SimDictionary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SchemeParams,
    pub handle: HandleMode,
}

impl ExperimentConfig {
    pub fn new(lambda: usize, tau: usize, message_bits: usize) -> Self {
        Self { params: SchemeParams { lambda, tau, message_bits }, handle: HandleMode::Opaque }
    }

    pub fn with_handle(mut self, handle: HandleMode) -> Self {
        self.handle = handle;
        self
    }
}

struct User<Pk, Sk> {
    id: String,
    policy: Policy,
    pk: Pk,
    /// `None` for simulated keys, which exist only inside the simulator's dictionary.
    sk: Option<Sk>,
}

fn info(experiment: &str, scheme: &str, params: SchemeParams) -> SetupInfo {
    SetupInfo { experiment: experiment.into(), scheme: scheme.into(), params }
}

fn dictionary<Pk, Sk>(users: &[User<Pk, Sk>]) -> BTreeMap<String, Policy> {
    users.iter().map(|u| (u.id.clone(), u.policy.clone())).collect()
}

fn check_choice(choice: &ChallengeChoice, params: &SchemeParams, message_bits: usize) -> Result<(), GameError> {
    if choice.x.len() != params.tau {
        return Err(GameError::AdversaryProtocolViolation(format!(
            "challenge attribute has {} bits, expected {}",
            choice.x.len(),
            params.tau
        )));
    }
    if choice.mu0.len() != message_bits || choice.mu1.len() != message_bits {
        return Err(GameError::AdversaryProtocolViolation(format!("challenge messages must have {message_bits} bits")));
    }
    Ok(())
}

/// Registers or corrupts keys as the adversary asks; `register` runs key
/// generation and registration for one policy and returns the new user.
fn drive_queries<Pk, Sk>(
    queries: Vec<Query>,
    users: &mut Vec<User<Pk, Sk>>,
    t: &mut GameTranscript,
    mut register: impl FnMut(&Policy) -> Result<(Pk, Option<Sk>, usize), GameError>,
) -> Result<(), GameError> {
    for q in queries {
        match q {
            Query::RegisterHonest { policy } => {
                let (pk, sk, epoch) = register(&policy)?;
                let id = user_id(users.len());
                t.honest.insert(id.clone());
                t.dictionary.insert(id.clone(), policy.to_string());
                t.push(GameEvent::RegisterHonest { id: id.clone(), policy: policy.to_string(), epoch });
                users.push(User { id, policy, pk, sk });
            }
            Query::RegisterCorrupted { policy } => {
                let (pk, sk, epoch) = register(&policy)?;
                let id = user_id(users.len());
                t.corrupted.insert(id.clone());
                t.dictionary.insert(id.clone(), policy.to_string());
                t.push(GameEvent::RegisterCorrupted { id: id.clone(), policy: policy.to_string(), epoch });
                users.push(User { id, policy, pk, sk });
            }
            Query::Corrupt { user } => {
                let id = users
                    .get(user)
                    .map(|u| u.id.clone())
                    .ok_or_else(|| GameError::AdversaryProtocolViolation(format!("no registered user {user}")))?;
                t.honest.remove(&id);
                t.corrupted.insert(id.clone());
                t.push(GameEvent::Corrupt { id });
            }
            other => {
                return Err(GameError::AdversaryProtocolViolation(format!(
                    "query {other:?} is not available in {}",
                    t.experiment
                )))
            }
        }
    }
    Ok(())
}

/// Real-world setup and query phase shared by the deletion experiments.
struct RealWorld<S: Scheme> {
    crs: S::Crs,
    aux: S::Aux,
    users: Vec<User<S::Pk, S::Sk>>,
}

impl<S: Scheme> RealWorld<S> {
    fn run_queries(
        params: &SchemeParams,
        adv: &mut dyn Adversary,
        info: &SetupInfo,
        t: &mut GameTranscript,
        rng: &mut ChaCha20Rng,
    ) -> Result<Self, GameError> {
        let crs = S::setup(params, rng)?;
        t.push(GameEvent::Setup { crs_digest: digest_hex("games/crs", &crs) });
        adv.on_setup(info);
        let mut aux = S::new_aux(&crs);
        let mut users = Vec::new();
        drive_queries(adv.query_phase(info), &mut users, t, |policy| {
            let (pk, sk) = S::keygen(&crs, Some(&aux), policy, rng)?;
            let (_, next) = S::regpk(&crs, &aux, &pk, policy)?;
            aux = next;
            Ok((pk, Some(sk), S::epoch(&aux)))
        })?;
        let world = Self { crs, aux, users };
        for u in world.users.iter().filter(|u| t.corrupted.contains(&u.id)) {
            adv.on_corrupted_key(&u.id, world.key(u)?);
        }
        Ok(world)
    }

    fn key(&self, u: &User<S::Pk, S::Sk>) -> Result<KeyMaterial, GameError> {
        let hsk = S::update(&self.crs, &self.aux, &u.pk)?;
        Ok(S::key_material(u.sk.as_ref().expect("real keys are kept"), &hsk))
    }

    fn honest_keys(&self, t: &GameTranscript) -> Result<Vec<RevealedKey>, GameError> {
        self.users
            .iter()
            .filter(|u| t.honest.contains(&u.id))
            .map(|u| Ok(RevealedKey { id: u.id.clone(), key: self.key(u)? }))
            .collect()
    }
}

fn output_label(output: &ExperimentOutput) -> String {
    match output {
        ExperimentOutput::Guess(g) => format!("guess={}", *g as u8),
        ExperimentOutput::Abort => "abort".into(),
        ExperimentOutput::Residual(_) => "residual".into(),
    }
}

/// Certified deletion with key reveal: honest keys are handed over only after
/// the certificate verifies.
pub fn run_exp_cd(
    scheme: SchemeTag,
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    match scheme {
        SchemeTag::PriVcd => exp_cd::<PriVcd>(b, adv, seed, config),
        SchemeTag::PubVcd => exp_cd::<PubVcd>(b, adv, seed, config),
        other => Err(GameError::Parameter(format!("exp-cd runs PriVCD or PubVCD, not {other}"))),
    }
}

fn exp_cd<S: Scheme>(
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    let params = config.params;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t = GameTranscript::new(seed, "exp-cd", S::TAG.as_str(), adv.name(), Some(b));
    let info = info("exp-cd", S::TAG.as_str(), params);
    let world = RealWorld::<S>::run_queries(&params, adv, &info, &mut t, &mut rng)?;

    let choice = adv.challenge_choice(&info);
    check_choice(&choice, &params, params.message_bits)?;
    admissibility_check(&dictionary(&world.users), &t.corrupted, &choice.x)?;
    let mu = if b { &choice.mu1 } else { &choice.mu0 };
    let dir = S::directory(&world.crs, &world.aux);
    let (vk, ct) = S::encrypt(&world.crs, &dir, &choice.x, mu, &mut rng)?;
    t.push(GameEvent::Challenge {
        attribute: choice.x.to_string(),
        messages: vec![choice.mu0.to_string(), choice.mu1.to_string()],
        ct_digest: digest_hex("games/ct", &ct.classical),
    });

    let public_vk = S::TAG.is_publicly_verifiable().then(|| vk.clone());
    let cert = adv.deletion_phase(Challenge::Hybrid { ct, vk: public_vk, x: choice.x.clone() });
    let accepted = cert.as_ref().is_some_and(|c| S::verify(&vk, c));
    t.push(GameEvent::Certificate { accepted, cert_digest: cert.as_ref().map(|c| digest_hex("games/cert", c)) });

    let output = if accepted {
        let revealed = world.honest_keys(&t)?;
        t.keys_revealed = true;
        t.push(GameEvent::RevealKeys { ids: revealed_ids(&revealed) });
        let g = adv.guess(Some(&revealed));
        t.push(GameEvent::Guess { bit: g });
        ExperimentOutput::Guess(g)
    } else {
        ExperimentOutput::Abort
    };
    t.verdict = Some(output_label(&output));
    Ok(ExperimentResult { b, output, trials: 1, checked_positions: checked_positions(&vk), transcript: t })
}

/// Certified everlasting deletion: the challenge is the single bit `b`, keys
/// are never revealed, and the output is the residual view or ⊥.
pub fn run_exp_ced(
    scheme: SchemeTag,
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    match scheme {
        SchemeTag::PriVced => exp_ced::<PriVced>(b, adv, seed, config),
        SchemeTag::PubVced => exp_ced::<PubVced>(b, adv, seed, config),
        other => Err(GameError::Parameter(format!("exp-ced runs PriVCED or PubVCED, not {other}"))),
    }
}

fn exp_ced<S: Scheme<Crs = RabeLayerCrs, Directory = RabeDirectory>>(
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    let params = SchemeParams { message_bits: 1, ..config.params };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t = GameTranscript::new(seed, "exp-ced", S::TAG.as_str(), adv.name(), Some(b));
    let info = info("exp-ced", S::TAG.as_str(), params);
    let world = RealWorld::<S>::run_queries(&params, adv, &info, &mut t, &mut rng)?;

    let choice = adv.challenge_choice(&info);
    check_choice(&choice, &params, 1)?;
    admissibility_check(&dictionary(&world.users), &t.corrupted, &choice.x)?;
    let dir = S::directory(&world.crs, &world.aux);
    let mu = BitString::new(vec![b]);
    let (vk, ct, handle) = match S::TAG {
        SchemeTag::PriVced => {
            let (vk, ct, p) = privced_encrypt_with_payloads(&world.crs, &dir, &choice.x, &mu, &mut rng)?;
            (vk, ct, HandleView::Opened { theta: p[0].theta.clone(), masked: p[0].masked })
        }
        _ => {
            let (vk, ct, p) = pubvced_encrypt_with_payloads(&world.crs, &dir, &choice.x, &mu, &mut rng)?;
            (vk, ct, HandleView::Opened { theta: p[0].theta.clone(), masked: p[0].masked })
        }
    };
    t.push(GameEvent::Challenge {
        attribute: choice.x.to_string(),
        messages: Vec::new(),
        ct_digest: digest_hex("games/ct", &ct.classical),
    });

    let public_vk = S::TAG.is_publicly_verifiable().then(|| vk.clone());
    let cert = adv.deletion_phase(Challenge::Hybrid { ct, vk: public_vk, x: choice.x.clone() });
    let accepted = cert.as_ref().is_some_and(|c| S::verify(&vk, c));
    t.push(GameEvent::Certificate { accepted, cert_digest: cert.as_ref().map(|c| digest_hex("games/cert", c)) });

    let output = match cert {
        Some(cert) if accepted => ExperimentOutput::Residual(ResidualView {
            cert,
            handle: if config.handle == HandleMode::Opened { handle } else { HandleView::Opaque },
        }),
        _ => ExperimentOutput::Abort,
    };
    t.verdict = Some(output_label(&output));
    Ok(ExperimentResult { b, output, trials: 1, checked_positions: checked_positions(&vk), transcript: t })
}

/// Real (`b = 0`) against simulated (`b = 1`) Shad-RABE. In the simulated
/// world honest keys are produced by Reveal, opening `ct*` to the challenge message.
pub fn run_exp_shad(
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    let params = config.params;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t = GameTranscript::new(seed, "exp-shad", "shad", adv.name(), Some(b));
    let info = info("exp-shad", "shad", params);
    let crs = shad::setup(params.lambda, params.tau, params.message_bits, &mut rng)?;
    t.push(GameEvent::Setup { crs_digest: digest_hex("games/crs", &crs) });
    adv.on_setup(&info);

    let mut aux = ShadAux::new(&crs);
    let mut dict = SimDictionary::new();
    let mut users: Vec<User<ShadPk, ShadSk>> = Vec::new();
    drive_queries(adv.query_phase(&info), &mut users, &mut t, |policy| {
        let (pk, sk) = if b {
            let pk = shad::sim_keygen(&crs, Some(&aux), policy, &mut dict, &mut rng)?;
            let (_, next) = shad::sim_regpk(&crs, &aux, &pk, policy, &dict)?;
            aux = next;
            (pk, None)
        } else {
            let (pk, sk) = shad::keygen(&crs, Some(&aux), policy, &mut rng)?;
            let (_, next) = shad::regpk(&crs, &aux, &pk, policy)?;
            aux = next;
            (pk, Some(sk))
        };
        Ok((pk, sk, aux.epoch()))
    })?;
    for u in users.iter().filter(|u| t.corrupted.contains(&u.id)) {
        let sk = match &u.sk {
            Some(sk) => sk.clone(),
            None => shad::sim_corrupt(&crs, &u.pk, &dict)?,
        };
        let hsk = shad::update(&crs, &aux, &u.pk)?;
        adv.on_corrupted_key(&u.id, KeyMaterial::Shad { sk, hsk });
    }

    let choice = adv.challenge_choice(&info);
    check_choice(&choice, &params, params.message_bits)?;
    admissibility_check(&dictionary(&users), &t.corrupted, &choice.x)?;
    let mu = choice.mu1.clone();
    let (mpk, views) = (aux.mpk(&crs), aux.views());
    let ct = if b {
        shad::sim_ct(&crs, &mpk, &views, &dict, &choice.x, &mut rng)?
    } else {
        shad::encrypt(&crs, &mpk, &views, &choice.x, &mu, &mut rng)?
    };
    t.push(GameEvent::Challenge {
        attribute: choice.x.to_string(),
        messages: vec![mu.to_string()],
        ct_digest: digest_hex("games/ct", &ct),
    });

    let mut revealed = Vec::new();
    for u in users.iter().filter(|u| t.honest.contains(&u.id)) {
        let sk = match &u.sk {
            Some(sk) => sk.clone(),
            None => shad::reveal(&crs, &u.pk, &dict, &ct, &mu)?,
        };
        let hsk = shad::update(&crs, &aux, &u.pk)?;
        revealed.push(RevealedKey { id: u.id.clone(), key: KeyMaterial::Shad { sk, hsk } });
    }
    adv.deletion_phase(Challenge::Shad { ct, x: choice.x.clone(), mu });
    t.keys_revealed = true;
    t.push(GameEvent::RevealKeys { ids: revealed_ids(&revealed) });
    let g = adv.guess(Some(&revealed));
    t.push(GameEvent::Guess { bit: g });
    let output = ExperimentOutput::Guess(g);
    t.verdict = Some(output_label(&output));
    Ok(ExperimentResult { b, output, trials: 1, checked_positions: None, transcript: t })
}

/// The lemma-level experiment: `(θ, b ⊕ ⊕_{θ_i=1} x_i)` behind a handle next to
/// `|x⟩_θ` (signed in the public variant). Accepts when `x'` matches `x` on
/// every `θ_i = 0` position, or when the signature verifies.
pub fn run_cel_experiment(
    variant: CedVariant,
    b: bool,
    adv: &mut dyn Adversary,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, GameError> {
    let public = match variant {
        CedVariant::CelPrivate => false,
        CedVariant::CelPublic => true,
        other => return Err(GameError::Parameter(format!("{other} is not a lemma experiment"))),
    };
    let lambda = config.params.lambda;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut t = GameTranscript::new(seed, variant.as_str(), "-", adv.name(), Some(b));
    let x = BitString::random(lambda, &mut rng);
    let theta = BasisString::random(lambda, &mut rng);
    let masked = b ^ x.parity_where(theta.bits(), true).expect("equal lengths");
    let (reg, vk) = if public {
        let kp = sig::sig_gen(lambda, &mut rng);
        (pubvced_signed_state(&x, &theta, &kp.sigk)?, Some(kp.vk))
    } else {
        (bb84_prepare(&x, &theta)?, None)
    };
    t.push(GameEvent::Challenge {
        attribute: String::new(),
        messages: Vec::new(),
        ct_digest: digest_hex("games/cel-register", &reg.to_record()),
    });

    let cert = adv.deletion_phase(Challenge::Cel { reg, vk: vk.clone(), lambda });
    let accepted = match (&cert, &vk) {
        (Some(DeletionCert::Bits(xp)), None) => xp.len() == lambda && xp.agrees_where(&x, theta.bits(), false),
        (Some(DeletionCert::Signed { message, signature }), Some(vk)) => sig::sig_verify(vk, message, signature),
        _ => false,
    };
    t.push(GameEvent::Certificate { accepted, cert_digest: cert.as_ref().map(|c| digest_hex("games/cert", c)) });
    let output = match cert {
        Some(cert) if accepted => ExperimentOutput::Residual(ResidualView {
            cert,
            handle: match config.handle {
                HandleMode::Opened => HandleView::Opened { theta: theta.clone(), masked },
                HandleMode::Opaque => HandleView::Opaque,
            },
        }),
        _ => ExperimentOutput::Abort,
    };
    t.verdict = Some(output_label(&output));
    let checked = (!public).then(|| lambda - theta.hadamard_count());
    Ok(ExperimentResult { b, output, trials: 1, checked_positions: checked, transcript: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::adversaries::{build_adversary, AdversaryKind, ShadProber};

    fn cd_config() -> ExperimentConfig {
        ExperimentConfig::new(8, 3, 2)
    }

    #[test]
    fn exp_cd_reveals_only_after_valid_cert() {
        for scheme in [SchemeTag::PriVcd, SchemeTag::PubVcd] {
            for (kind, expect_abort) in [(AdversaryKind::HonestDeleter, false), (AdversaryKind::CertForger, true)] {
                let mut adv = build_adversary(kind, 5);
                let r = run_exp_cd(scheme, true, adv.as_mut(), 11, &cd_config()).unwrap();
                assert_eq!(r.is_abort(), expect_abort, "{scheme} {kind}");
                assert_eq!(r.transcript.keys_revealed, !expect_abort);
                let reveals = r.transcript.events.iter().any(|e| matches!(e, GameEvent::RevealKeys { .. }));
                assert_eq!(reveals, !expect_abort);
            }
        }
    }

    #[test]
    fn decrypt_first_is_inadmissible() {
        let mut adv = build_adversary(AdversaryKind::DecryptFirst, 1);
        let err = run_exp_cd(SchemeTag::PriVcd, false, adv.as_mut(), 2, &cd_config()).unwrap_err();
        assert!(matches!(err, GameError::Admissibility(_)));
        let mut adv = build_adversary(AdversaryKind::DecryptFirst, 1);
        let err = run_exp_shad(false, adv.as_mut(), 2, &cd_config()).unwrap_err();
        assert!(matches!(err, GameError::Admissibility(_)));
    }

    #[test]
    fn exp_ced_never_reveals() {
        for scheme in [SchemeTag::PriVced, SchemeTag::PubVced] {
            for kind in [AdversaryKind::HonestDeleter, AdversaryKind::CertForger] {
                let mut adv = build_adversary(kind, 3);
                let r = run_exp_ced(scheme, false, adv.as_mut(), 4, &ExperimentConfig::new(6, 3, 1)).unwrap();
                assert!(!r.transcript.keys_revealed);
                assert_eq!(r.is_abort(), kind == AdversaryKind::CertForger);
                if let ExperimentOutput::Residual(v) = &r.output {
                    assert_eq!(v.handle, HandleView::Opaque);
                }
            }
        }
    }

    #[test]
    fn exp_ced_rejects_cd_schemes() {
        let mut adv = build_adversary(AdversaryKind::HonestDeleter, 3);
        assert!(run_exp_ced(SchemeTag::PriVcd, false, adv.as_mut(), 4, &cd_config()).is_err());
        assert!(run_exp_cd(SchemeTag::PubVced, false, adv.as_mut(), 4, &cd_config()).is_err());
    }

    #[test]
    fn functional_consistency_in_both_worlds() {
        for b in [false, true] {
            for seed in 0..4 {
                let mut adv = ShadProber::new(AdversaryKind::FunctionalConsistency, seed);
                let r = run_exp_shad(b, &mut adv, seed + 100, &ExperimentConfig::new(8, 3, 3)).unwrap();
                assert_eq!(adv.consistent, Some(true), "b = {b}");
                assert_eq!(r.output, ExperimentOutput::Guess(false));
            }
        }
    }

    #[test]
    fn cel_honest_is_always_accepted() {
        for variant in [CedVariant::CelPrivate, CedVariant::CelPublic] {
            for seed in 0..20 {
                let mut adv = build_adversary(AdversaryKind::HonestDeleter, seed);
                let config = ExperimentConfig::new(6, 1, 1).with_handle(HandleMode::Opened);
                let r = run_cel_experiment(variant, seed % 2 == 0, adv.as_mut(), seed, &config).unwrap();
                assert!(matches!(r.output, ExperimentOutput::Residual(_)), "{variant} seed {seed}");
            }
        }
    }

    #[test]
    fn replay_is_byte_exact() {
        let run = || {
            let mut adv = build_adversary(AdversaryKind::HonestDeleter, 9);
            run_exp_cd(SchemeTag::PriVcd, true, adv.as_mut(), 77, &cd_config()).unwrap().transcript.to_json()
        };
        assert_eq!(run(), run());
    }
}
