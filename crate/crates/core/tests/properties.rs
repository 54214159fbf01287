use proptest::prelude::*;
use rabecd_core::primitives::{oss, pke, sig, skecd};
use rabecd_core::protocols::{PriVcd, PriVced, PubVcd, PubVced};
use rabecd_core::qstate::bb84_prepare;
use rabecd_core::rabe::{self, ceil_log2, policy_eval, AuxState};
use rabecd_core::{BasisString, BitString, DecryptOutcome, Policy, Scheme, SchemeParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const TAU: usize = 4;

fn policy() -> impl Strategy<Value = Policy> {
    let leaf = prop_oneof![any::<bool>().prop_map(Policy::Const), (0..TAU).prop_map(Policy::attr)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Policy::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Policy::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Policy::or(a, b)),
        ]
    })
}

fn bits(n: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), n).prop_map(BitString::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policies_print_and_parse_back(p in policy(), x in bits(TAU)) {
        let q: Policy = p.to_string().parse().unwrap();
        prop_assert_eq!(policy_eval(&p, &x).unwrap(), policy_eval(&q, &x).unwrap());
    }

    #[test]
    fn measurement_outcomes_have_the_measured_width(x in bits(6), theta in bits(6), basis in bits(6), seed: u64) {
        let reg = bb84_prepare(&x, &BasisString::new(theta)).unwrap();
        let m = reg.measure_in_basis(&BasisString::new(basis), &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(m.outcome.len(), 6);
        prop_assert!(m.post_state.is_normalized());
        let branches = m.post_state.branches().unwrap();
        let total: f64 = branches.iter().map(|(_, a)| a * a).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pke_round_trips(m in prop::collection::vec(any::<u8>(), 0..64), seed: u64, r: [u8; 32]) {
        let kp = pke::pke_keygen(&mut ChaCha20Rng::seed_from_u64(seed));
        let ct = pke::pke_encrypt(&kp.pk, &m, &r).unwrap();
        prop_assert_eq!(pke::pke_decrypt(&kp.sk, &ct), Some(m));
    }

    #[test]
    fn signing_is_deterministic_and_verifies(m in bits(12), seed: u64) {
        let kp = sig::sig_gen(12, &mut ChaCha20Rng::seed_from_u64(seed));
        let s = sig::sig_sign(&kp.sigk, &m).unwrap();
        prop_assert_eq!(&s, &sig::sig_sign(&kp.sigk, &m).unwrap());
        prop_assert_eq!(s.to_bits().len(), kp.sig_width());
        prop_assert!(sig::sig_verify(&kp.vk, &m, &s));
    }

    #[test]
    fn one_shot_key_signs_one_bit(m: bool, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = oss::oss_setup(&mut rng);
        let mut kp = oss::oss_keygen(&crs, &mut rng);
        prop_assert!(!kp.sk.is_consumed());
        let s = oss::oss_sign(&mut kp.sk, m).unwrap();
        prop_assert!(kp.sk.is_consumed());
        prop_assert!(oss::oss_verify(&crs, &kp.pk, &s, m));
        prop_assert!(oss::oss_sign(&mut kp.sk, !m).is_err());
    }

    #[test]
    fn skecd_decrypts_and_honest_deletion_verifies(m in bits(3), lambda in 1usize..=8, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut key = skecd::skecd_keygen(3, lambda, &mut rng);
        prop_assert_eq!(key.message_len(), 3);
        prop_assert_eq!(key.to_bits().len(), skecd::SkecdKey::bit_width(3, lambda));
        let ct = skecd::skecd_encrypt(&mut key, &m).unwrap();
        prop_assert!(ct.quantum.iter().all(|q| q.n_wires() == lambda));
        prop_assert_eq!(skecd::skecd_decrypt(&key, &mut ct.clone(), &mut rng), Some(m));
        let cert = skecd::skecd_delete(&mut ct.clone(), &mut rng).unwrap();
        prop_assert!(skecd::skecd_verify(&key, &cert));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rabe_directory_invariants_and_decryption(policies in prop::collection::vec(policy(), 1..10), x in bits(TAU), seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = rabe::setup(16, TAU, &mut rng).unwrap();
        let mut aux = AuxState::new(&crs);
        let mut keys = Vec::new();
        for p in &policies {
            let (pk, sk) = rabe::keygen(&crs, Some(&aux), p, &mut rng).unwrap();
            aux = rabe::regpk(&crs, &aux, &pk, p).unwrap().1;
            keys.push((pk, sk));
        }
        prop_assert_eq!(aux.epoch(), policies.len());
        prop_assert_eq!(aux.historical_roots.len(), policies.len() + 1);

        let ct = rabe::encrypt(&crs, &aux.mpk(), &aux.view(), &x, b"msg", &mut rng).unwrap();
        let covered: Vec<usize> = ct.entries.iter().map(|e| e.slot_index).collect();
        let satisfied: Vec<usize> = (0..policies.len()).filter(|&i| policy_eval(&policies[i], &x).unwrap()).collect();
        prop_assert_eq!(covered, satisfied);

        for ((pk, sk), p) in keys.iter().zip(&policies) {
            let hsk = rabe::update(&crs, &aux, pk).unwrap();
            prop_assert!(hsk.slots.iter().all(|s| s.merkle_path.len() == ceil_log2(aux.epoch())));
            let out = rabe::decrypt(sk, &hsk, &x, &ct);
            if policy_eval(p, &x).unwrap() {
                prop_assert_eq!(out, DecryptOutcome::Plaintext(b"msg".to_vec()));
            } else {
                prop_assert_eq!(out, DecryptOutcome::Reject);
            }
        }
    }
}

fn scheme_round_trip<S: Scheme>(mu: &BitString, p: &Policy, x: &BitString, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = SchemeParams { lambda: 8, tau: TAU, message_bits: mu.len() };
    let crs = S::setup(&params, &mut rng).unwrap();
    let (pk, sk) = S::keygen(&crs, None, p, &mut rng).unwrap();
    let (dir, aux) = S::regpk(&crs, &S::new_aux(&crs), &pk, p).unwrap();
    let hsk = S::update(&crs, &aux, &pk).unwrap();

    let (_, mut ct) = S::encrypt(&crs, &dir, x, mu, &mut rng).unwrap();
    let out = S::decrypt(&sk, &hsk, x, &mut ct, &mut rng);
    if policy_eval(p, x).unwrap() {
        prop_assert_eq!(out, DecryptOutcome::Plaintext(mu.clone()), "{}", S::TAG);
    } else {
        prop_assert_eq!(out, DecryptOutcome::Reject, "{}", S::TAG);
    }

    let (vk, mut ct) = S::encrypt(&crs, &dir, x, mu, &mut rng).unwrap();
    let cert = S::delete(&mut ct, &mut rng).unwrap();
    prop_assert!(S::verify(&vk, &cert), "{}", S::TAG);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn schemes_decrypt_iff_the_policy_holds_and_deletion_verifies(mu in bits(2), p in policy(), x in bits(TAU), seed: u64) {
        scheme_round_trip::<PriVcd>(&mu, &p, &x, seed)?;
        scheme_round_trip::<PubVcd>(&mu, &p, &x, seed)?;
        scheme_round_trip::<PriVced>(&mu, &p, &x, seed)?;
        scheme_round_trip::<PubVced>(&mu, &p, &x, seed)?;
    }
}
