//! Exact residual trace distances for small λ by full enumeration, and the
//! Monte-Carlo estimate of the same quantity from the real experiments.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::adversaries::{build_adversary, AdversaryKind};
use super::experiments::{run_cel_experiment, run_exp_ced, ExperimentConfig};
use super::{trial_seed, ExperimentOutput, GameError, HandleMode, HandleView};
use crate::bits::{BasisString, BitString};
use crate::primitives::sig::{self, SignOracle, Signature};
use crate::primitives::DeletionCert;
use crate::protocols::SchemeTag;
use crate::qstate::{bb84_prepare, distribution_trace_distance, Distribution};

/// Largest λ the enumeration accepts: `4^λ` preparations.
pub const MAX_EXACT_LAMBDA: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CedVariant {
    PriVced,
    PubVced,
    CelPrivate,
    CelPublic,
}

impl CedVariant {
    pub const ALL: [CedVariant; 4] =
        [CedVariant::PriVced, CedVariant::PubVced, CedVariant::CelPrivate, CedVariant::CelPublic];

    pub fn as_str(self) -> &'static str {
        match self {
            CedVariant::PriVced => "privced",
            CedVariant::PubVced => "pubvced",
            CedVariant::CelPrivate => "cel-private",
            CedVariant::CelPublic => "cel-public",
        }
    }

    pub fn is_public(self) -> bool {
        matches!(self, CedVariant::PubVced | CedVariant::CelPublic)
    }

    /// The basis value whose positions the mask covers; the other positions are checked
    /// (private variants) or carry nothing (public ones).
    pub fn mask_basis(self) -> bool {
        self != CedVariant::PriVced
    }

    fn honest_is_hadamard(self) -> bool {
        self == CedVariant::PriVced
    }
}

impl fmt::Display for CedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureStrategy {
    Honest,
    Computational,
    Hadamard,
}

impl MeasureStrategy {
    pub fn adversary_kind(self) -> AdversaryKind {
        match self {
            MeasureStrategy::Honest => AdversaryKind::HonestDeleter,
            MeasureStrategy::Computational => AdversaryKind::ComputationalMeasurer,
            MeasureStrategy::Hadamard => AdversaryKind::HadamardMeasurer,
        }
    }

    pub fn from_adversary(kind: AdversaryKind) -> Option<Self> {
        match kind {
            AdversaryKind::HonestDeleter => Some(MeasureStrategy::Honest),
            AdversaryKind::ComputationalMeasurer => Some(MeasureStrategy::Computational),
            AdversaryKind::HadamardMeasurer => Some(MeasureStrategy::Hadamard),
            _ => None,
        }
    }

    fn hadamard(self, variant: CedVariant) -> bool {
        match self {
            MeasureStrategy::Honest => variant.honest_is_hadamard(),
            MeasureStrategy::Computational => false,
            MeasureStrategy::Hadamard => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTd {
    pub variant: CedVariant,
    pub strategy: MeasureStrategy,
    pub lambda: usize,
    pub mode: HandleMode,
    /// Between the full residual views (acceptance bit, every measured wire, opened handle).
    pub td: f64,
    /// Between the reduced views: ⊥ or (1, β ⊕ parity of the certificate over the mask).
    pub reduced_td: f64,
    pub accept_probability: f64,
    pub reduced: [Vec<(BitString, f64)>; 2],
}

/// Key of the reduced statistic.
fn reduced_key(accepted: bool, unmasked: Option<bool>) -> BitString {
    BitString::new(vec![accepted, accepted && unmasked.unwrap_or(false)])
}

fn accepts(variant: CedVariant, x: &BitString, theta: &BasisString, outcome: &BitString, vk: Option<&sig::VerificationKey>) -> bool {
    let lambda = x.len();
    let msg = outcome.slice(0, lambda);
    match variant {
        CedVariant::PriVced => msg.agrees_where(x, theta.bits(), true),
        CedVariant::CelPrivate => msg.agrees_where(x, theta.bits(), false),
        CedVariant::PubVced | CedVariant::CelPublic => {
            let sigma = Signature::from_bits(&outcome.slice(lambda, outcome.len()));
            sig::sig_verify(vk.expect("public variants carry a key"), &msg, &sigma)
        }
    }
}

/// Enumerates every `(x, θ)` and every measurement outcome of `strategy`, and
/// returns the trace distance between the `b = 0` and `b = 1` residual views.
pub fn exact_residual_td(
    variant: CedVariant,
    strategy: MeasureStrategy,
    lambda: usize,
    mode: HandleMode,
    seed: u64,
) -> Result<ExactTd, GameError> {
    if lambda == 0 || lambda > MAX_EXACT_LAMBDA {
        return Err(GameError::Parameter(format!("exact enumeration needs 1 <= λ <= {MAX_EXACT_LAMBDA}, got {lambda}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let keys = variant.is_public().then(|| sig::sig_gen(lambda, &mut rng));
    let sig_width = if keys.is_some() { sig::signature_width(lambda) } else { 0 };
    let n = lambda + sig_width;
    let head = if strategy.hadamard(variant) { BasisString::hadamard(lambda) } else { BasisString::computational(lambda) };
    let basis = BasisString::new(head.into_bits().concat(&BitString::zeros(sig_width)));

    let weight = 1.0 / (1u64 << (2 * lambda)) as f64;
    let mut views: [Distribution; 2] = Default::default();
    let mut reduced: [Distribution; 2] = Default::default();
    let mut accept_probability = 0.0;
    let opened = mode == HandleMode::Opened;
    let view_len = 1 + n + if opened { lambda + 1 } else { 0 };

    for xv in 0..1u64 << lambda {
        let x = BitString::from_u64(xv, lambda);
        for tv in 0..1u64 << lambda {
            let theta = BasisString::new(BitString::from_u64(tv, lambda));
            let mut reg = bb84_prepare(&x, &theta)?;
            if let Some(kp) = &keys {
                reg = reg.apply_xor_map(SignOracle::new(kp.sigk.clone()), sig_width)?;
            }
            let mask = x.parity_where(theta.bits(), variant.mask_basis()).expect("equal lengths");
            for (outcome, p) in reg.outcome_distribution(&basis)? {
                if p < 1e-15 {
                    continue;
                }
                let p = p * weight;
                let accepted = accepts(variant, &x, &theta, &outcome, keys.as_ref().map(|k| &k.vk));
                if accepted {
                    accept_probability += p;
                }
                let msg_parity =
                    outcome.slice(0, lambda).parity_where(theta.bits(), variant.mask_basis()).expect("equal lengths");
                for b in [false, true] {
                    let beta = b ^ mask;
                    let view = if accepted {
                        let mut v = BitString::new(vec![true]).concat(&outcome);
                        if opened {
                            v = v.concat(theta.bits());
                            v.push(beta);
                        }
                        v
                    } else {
                        BitString::zeros(view_len)
                    };
                    *views[b as usize].entry(view).or_default() += p;
                    let unmasked = opened.then_some(beta ^ msg_parity);
                    *reduced[b as usize].entry(reduced_key(accepted, unmasked)).or_default() += p;
                }
            }
        }
    }
    let td = distribution_trace_distance(&views[0], &views[1])?;
    let reduced_td = distribution_trace_distance(&reduced[0], &reduced[1])?;
    let [r0, r1] = reduced;
    Ok(ExactTd {
        variant,
        strategy,
        lambda,
        mode,
        td,
        reduced_td,
        accept_probability,
        reduced: [r0.into_iter().collect(), r1.into_iter().collect()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTd {
    pub variant: CedVariant,
    pub strategy: MeasureStrategy,
    pub lambda: usize,
    pub trials_per_bit: usize,
    pub td: f64,
    /// Standard error of `td`, summed cell by cell.
    pub sigma: f64,
    pub abort_rate: [f64; 2],
    pub reduced: [Vec<(BitString, f64)>; 2],
}

impl MonteCarloTd {
    pub fn agrees_with(&self, exact: &ExactTd, sigmas: f64) -> bool {
        (self.td - exact.reduced_td).abs() <= sigmas * self.sigma + 1e-12
    }
}

/// Reduced statistic of one experiment output (which must come from an opened handle).
pub fn reduced_statistic(variant: CedVariant, output: &ExperimentOutput) -> BitString {
    let ExperimentOutput::Residual(view) = output else {
        return reduced_key(false, None);
    };
    let msg = match &view.cert {
        DeletionCert::Bits(m) | DeletionCert::Signed { message: m, .. } => m,
        DeletionCert::OneShot(_) => return reduced_key(true, None),
    };
    let unmasked = match &view.handle {
        HandleView::Opened { theta, masked } => {
            msg.parity_where(theta.bits(), variant.mask_basis()).ok().map(|p| p ^ masked)
        }
        HandleView::Opaque => None,
    };
    reduced_key(true, unmasked)
}

/// Runs `trials_per_bit` real experiments for each challenge bit with opened
/// handles, and estimates the reduced trace distance.
pub fn monte_carlo_td(
    variant: CedVariant,
    strategy: MeasureStrategy,
    lambda: usize,
    trials_per_bit: usize,
    seed: u64,
    jobs: usize,
) -> Result<MonteCarloTd, GameError> {
    if trials_per_bit == 0 {
        return Err(GameError::Parameter("need at least one trial per bit".into()));
    }
    let config = ExperimentConfig::new(lambda, 3, 1).with_handle(HandleMode::Opened);
    let kind = strategy.adversary_kind();
    let results = super::run_trials(2 * trials_per_bit, seed, jobs, |s, i| {
        let b = i % 2 == 1;
        let mut adv = build_adversary(kind, trial_seed(s, 1));
        let r = match variant {
            CedVariant::PriVced => run_exp_ced(SchemeTag::PriVced, b, adv.as_mut(), s, &config),
            CedVariant::PubVced => run_exp_ced(SchemeTag::PubVced, b, adv.as_mut(), s, &config),
            _ => run_cel_experiment(variant, b, adv.as_mut(), s, &config),
        };
        r.map(|r| (b, reduced_statistic(variant, &r.output)))
    });
    let mut counts: [BTreeMap<BitString, usize>; 2] = Default::default();
    for r in results {
        let (b, key) = r?;
        *counts[b as usize].entry(key).or_default() += 1;
    }
    let n = trials_per_bit as f64;
    let cells: std::collections::BTreeSet<&BitString> = counts.iter().flat_map(|c| c.keys()).collect();
    let (mut td, mut sigma) = (0.0, 0.0);
    for cell in cells {
        let p0 = *counts[0].get(cell).unwrap_or(&0) as f64 / n;
        let p1 = *counts[1].get(cell).unwrap_or(&0) as f64 / n;
        td += 0.5 * (p0 - p1).abs();
        sigma += 0.5 * ((p0 * (1.0 - p0) + p1 * (1.0 - p1)) / n).sqrt();
    }
    let abort = reduced_key(false, None);
    let abort_rate = [0, 1].map(|b| *counts[b].get(&abort).unwrap_or(&0) as f64 / n);
    let reduced = counts.map(|c| c.into_iter().map(|(k, v)| (k, v as f64 / n)).collect());
    Ok(MonteCarloTd { variant, strategy, lambda, trials_per_bit, td, sigma, abort_rate, reduced })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opaque_views_are_identical() {
        for variant in CedVariant::ALL {
            for strategy in [MeasureStrategy::Honest, MeasureStrategy::Computational, MeasureStrategy::Hadamard] {
                let e = exact_residual_td(variant, strategy, 3, HandleMode::Opaque, 1).unwrap();
                assert!(e.td.abs() < 1e-12, "{variant} {strategy:?}: {}", e.td);
            }
        }
    }

    #[test]
    fn honest_opened_is_two_to_minus_lambda() {
        for variant in CedVariant::ALL {
            for lambda in 1..=4 {
                let e = exact_residual_td(variant, MeasureStrategy::Honest, lambda, HandleMode::Opened, 2).unwrap();
                let closed = 0.5f64.powi(lambda as i32);
                assert!((e.td - closed).abs() < 1e-9, "{variant} λ={lambda}: {}", e.td);
                assert!((e.reduced_td - closed).abs() < 1e-9);
                assert!((e.accept_probability - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn computational_measurer_against_privced() {
        for lambda in 1..=5 {
            let e = exact_residual_td(CedVariant::PriVced, MeasureStrategy::Computational, lambda, HandleMode::Opened, 0)
                .unwrap();
            // Accepted with probability 2^-h for h Hadamard positions, and then the mask is fully known.
            let closed: f64 = (0..=lambda)
                .map(|h| binomial(lambda, h) * 0.5f64.powi(lambda as i32) * 0.5f64.powi(h as i32))
                .sum();
            assert!((closed - 0.75f64.powi(lambda as i32)).abs() < 1e-12);
            assert!((e.td - closed).abs() < 1e-9, "λ={lambda}: {} vs {closed}", e.td);
        }
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn rejects_large_lambda() {
        assert!(exact_residual_td(CedVariant::PriVced, MeasureStrategy::Honest, 9, HandleMode::Opened, 0).is_err());
    }

    #[test]
    fn monte_carlo_matches_exact_on_cel() {
        let exact = exact_residual_td(CedVariant::CelPrivate, MeasureStrategy::Hadamard, 3, HandleMode::Opened, 0).unwrap();
        let mc = monte_carlo_td(CedVariant::CelPrivate, MeasureStrategy::Hadamard, 3, 1500, 4, 1).unwrap();
        assert!(mc.agrees_with(&exact, 4.0), "mc {} ± {} vs exact {}", mc.td, mc.sigma, exact.reduced_td);
    }
}
