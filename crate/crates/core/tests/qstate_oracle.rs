mod common;

use proptest::prelude::*;
use rabecd_core::qstate::{bb84_prepare, distribution_trace_distance};
use rabecd_core::{BasisString, BitString};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_sequences_match_dense(seed in any::<u64>()) {
        let r = common::qstate_case(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn bb84_is_normalized_and_matches_dense(x in prop::collection::vec(any::<bool>(), 1..9), seed in any::<u64>()) {
        let theta: Vec<bool> = x.iter().enumerate().map(|(i, _)| (seed >> i) & 1 == 1).collect();
        let reg = bb84_prepare(&BitString::new(x.clone()), &BasisString::new(BitString::new(theta.clone()))).unwrap();
        prop_assert!(reg.is_normalized());
        let dense = common::Dense::bb84(&x, &theta);
        prop_assert!(common::max_difference(&reg.dense_statevector().unwrap(), &dense.amp) < 1e-12);
    }

    #[test]
    fn measuring_in_the_preparation_basis_returns_x(x in prop::collection::vec(any::<bool>(), 1..12), seed in any::<u64>()) {
        let theta = BasisString::new(BitString::new(x.iter().enumerate().map(|(i, _)| (seed >> i) & 1 == 1).collect()));
        let reg = bb84_prepare(&BitString::new(x.clone()), &theta).unwrap();
        let dist = reg.outcome_distribution(&theta).unwrap();
        prop_assert_eq!(dist.len(), 1);
        prop_assert!((dist[&BitString::new(x)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_is_a_metric(a in prop::collection::vec(0.01f64..1.0, 4), b in prop::collection::vec(0.01f64..1.0, 4)) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().enumerate().map(|(i, p)| (BitString::from_u64(i as u64, 2), p / s)).collect()
        };
        let (p, q) = (norm(&a), norm(&b));
        let d = distribution_trace_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - distribution_trace_distance(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!(distribution_trace_distance(&p, &p).unwrap() < 1e-12);
    }
}
