//! One entry point that runs any experiment for many trials and summarizes it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::adversaries::{build_adversary, AdversaryKind, QueryMix};
use super::correctness::{run_decryption_game, run_verification_game, GameHooks};
use super::exact::{exact_residual_td, reduced_statistic, CedVariant, MeasureStrategy, MAX_EXACT_LAMBDA};
use super::experiments::{run_cel_experiment, run_exp_cd, run_exp_ced, run_exp_shad, ExperimentConfig};
use super::stats::{empirical_trace_distance, estimate_advantage, AdvantageEstimate};
use super::{run_trials, trial_seed, ExperimentResult, GameError, GameTranscript, HandleMode};
use crate::protocols::{SchemeParams, SchemeTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Decryption,
    Verification,
    Cd,
    Ced,
    Shad,
    CelPrivate,
    CelPublic,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Decryption,
        ExperimentKind::Verification,
        ExperimentKind::Cd,
        ExperimentKind::Ced,
        ExperimentKind::Shad,
        ExperimentKind::CelPrivate,
        ExperimentKind::CelPublic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Decryption => "decryption",
            ExperimentKind::Verification => "verification",
            ExperimentKind::Cd => "cd",
            ExperimentKind::Ced => "ced",
            ExperimentKind::Shad => "shad",
            ExperimentKind::CelPrivate => "cel-private",
            ExperimentKind::CelPublic => "cel-public",
        }
    }

    fn needs_scheme(self) -> bool {
        matches!(self, ExperimentKind::Decryption | ExperimentKind::Verification | ExperimentKind::Cd | ExperimentKind::Ced)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, GameError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GameError::Parameter(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub experiment: ExperimentKind,
    pub scheme: Option<SchemeTag>,
    pub adversary: AdversaryKind,
    /// Per challenge bit for the indistinguishability experiments; total otherwise.
    pub trials: usize,
    pub seed: u64,
    pub params: SchemeParams,
    pub jobs: usize,
    pub handle: HandleMode,
    /// Transcripts kept in the report, from the first trials.
    pub keep_transcripts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub spec: GameSpec,
    pub advantage: Option<AdvantageEstimate>,
    /// Fraction of ⊥ outputs, per challenge bit.
    pub abort_rate: Option<[f64; 2]>,
    /// Fraction of correctness games ending with `b = 1`.
    pub success_rate: Option<f64>,
    /// Reduced residual trace distance estimated from the trials.
    pub empirical_td: Option<f64>,
    /// Enumerated trace distance of the full residual views, when λ is small enough.
    pub exact_td: Option<f64>,
    pub transcripts: Vec<GameTranscript>,
}

fn scheme(spec: &GameSpec) -> Result<SchemeTag, GameError> {
    spec.scheme.ok_or_else(|| GameError::Parameter(format!("experiment {} needs a scheme", spec.experiment)))
}

pub fn run_game(spec: &GameSpec) -> Result<GameReport, GameError> {
    if spec.trials == 0 {
        return Err(GameError::Parameter("trials must be positive".into()));
    }
    if spec.experiment.needs_scheme() {
        scheme(spec)?;
    }
    let mut report = GameReport {
        spec: spec.clone(),
        advantage: None,
        abort_rate: None,
        success_rate: None,
        empirical_td: None,
        exact_td: None,
        transcripts: Vec::new(),
    };
    match spec.experiment {
        ExperimentKind::Decryption | ExperimentKind::Verification => {
            let tag = scheme(spec)?;
            let verdicts = run_trials(spec.trials, spec.seed, spec.jobs, |s, _| {
                let mut adv: Box<dyn super::Adversary + Send> = match spec.adversary {
                    AdversaryKind::QueryMix | AdversaryKind::EpochGap | AdversaryKind::Fuzz => {
                        build_adversary(spec.adversary, trial_seed(s, 1))
                    }
                    _ => Box::new(QueryMix::new(trial_seed(s, 1), 20, false)),
                };
                if spec.experiment == ExperimentKind::Decryption {
                    run_decryption_game(tag, adv.as_mut(), s, &spec.params, GameHooks::default())
                } else {
                    run_verification_game(tag, adv.as_mut(), s, &spec.params, GameHooks::default())
                }
            });
            let verdicts = verdicts.into_iter().collect::<Result<Vec<_>, _>>()?;
            let ok = verdicts.iter().filter(|v| v.b).count();
            report.success_rate = Some(ok as f64 / verdicts.len() as f64);
            report.transcripts = verdicts.into_iter().take(spec.keep_transcripts).map(|v| v.transcript).collect();
        }
        _ => {
            let results = run_bits(spec)?;
            let (r0, r1): (Vec<&ExperimentResult>, Vec<&ExperimentResult>) = results.iter().partition(|r| !r.b);
            let abort = |rs: &[&ExperimentResult]| rs.iter().filter(|r| r.is_abort()).count() as f64 / rs.len() as f64;
            report.abort_rate = Some([abort(&r0), abort(&r1)]);
            let residual = matches!(
                spec.experiment,
                ExperimentKind::Ced | ExperimentKind::CelPrivate | ExperimentKind::CelPublic
            );
            if residual {
                let variant = ced_variant(spec)?;
                let stat = |rs: &[&ExperimentResult]| {
                    rs.iter().map(|r| reduced_statistic(variant, &r.output)).collect::<Vec<_>>()
                };
                report.empirical_td = Some(empirical_trace_distance(&stat(&r0), &stat(&r1)));
                if let Some(strategy) = MeasureStrategy::from_adversary(spec.adversary) {
                    if spec.params.lambda <= MAX_EXACT_LAMBDA {
                        report.exact_td = Some(exact_residual_td(variant, strategy, spec.params.lambda, spec.handle, spec.seed)?.td);
                    }
                }
            } else {
                let bits = |rs: &[&ExperimentResult]| rs.iter().map(|r| r.output_bit()).collect::<Vec<_>>();
                report.advantage = Some(estimate_advantage(&bits(&r0), &bits(&r1)));
            }
            report.transcripts = results.into_iter().take(spec.keep_transcripts).map(|r| r.transcript).collect();
        }
    }
    Ok(report)
}

fn ced_variant(spec: &GameSpec) -> Result<CedVariant, GameError> {
    match spec.experiment {
        ExperimentKind::CelPrivate => Ok(CedVariant::CelPrivate),
        ExperimentKind::CelPublic => Ok(CedVariant::CelPublic),
        _ => match scheme(spec)? {
            SchemeTag::PriVced => Ok(CedVariant::PriVced),
            SchemeTag::PubVced => Ok(CedVariant::PubVced),
            other => Err(GameError::Parameter(format!("{other} has no everlasting experiment"))),
        },
    }
}

/// Runs `trials` experiments for each challenge bit, alternating bits.
fn run_bits(spec: &GameSpec) -> Result<Vec<ExperimentResult>, GameError> {
    let config = ExperimentConfig { params: spec.params, handle: spec.handle };
    let results = run_trials(2 * spec.trials, spec.seed, spec.jobs, |s, i| {
        let b = i % 2 == 1;
        let mut adv = build_adversary(spec.adversary, trial_seed(s, 1));
        match spec.experiment {
            ExperimentKind::Cd => run_exp_cd(scheme(spec)?, b, adv.as_mut(), s, &config),
            ExperimentKind::Ced => run_exp_ced(scheme(spec)?, b, adv.as_mut(), s, &config),
            ExperimentKind::Shad => run_exp_shad(b, adv.as_mut(), s, &config),
            ExperimentKind::CelPrivate => run_cel_experiment(CedVariant::CelPrivate, b, adv.as_mut(), s, &config),
            ExperimentKind::CelPublic => run_cel_experiment(CedVariant::CelPublic, b, adv.as_mut(), s, &config),
            ExperimentKind::Decryption | ExperimentKind::Verification => unreachable!("handled by run_game"),
        }
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(experiment: ExperimentKind, scheme: Option<SchemeTag>, adversary: AdversaryKind) -> GameSpec {
        GameSpec {
            experiment,
            scheme,
            adversary,
            trials: 6,
            seed: 3,
            params: SchemeParams { lambda: 6, tau: 3, message_bits: 2 },
            jobs: 1,
            handle: HandleMode::Opaque,
            keep_transcripts: 1,
        }
    }

    #[test]
    fn every_experiment_runs() {
        let cases = [
            (ExperimentKind::Decryption, Some(SchemeTag::PubVced), AdversaryKind::QueryMix),
            (ExperimentKind::Verification, Some(SchemeTag::PriVcd), AdversaryKind::EpochGap),
            (ExperimentKind::Cd, Some(SchemeTag::PriVcd), AdversaryKind::HonestDeleter),
            (ExperimentKind::Ced, Some(SchemeTag::PriVced), AdversaryKind::HonestDeleter),
            (ExperimentKind::Shad, None, AdversaryKind::ZProber),
            (ExperimentKind::CelPrivate, None, AdversaryKind::HadamardMeasurer),
            (ExperimentKind::CelPublic, None, AdversaryKind::HonestDeleter),
        ];
        for (e, s, a) in cases {
            let r = run_game(&spec(e, s, a)).unwrap();
            assert_eq!(r.transcripts.len(), 1, "{e}");
            match e {
                ExperimentKind::Decryption | ExperimentKind::Verification => assert_eq!(r.success_rate, Some(1.0)),
                ExperimentKind::Cd | ExperimentKind::Shad => assert!(r.advantage.is_some()),
                _ => assert_eq!(r.exact_td.is_some(), a != AdversaryKind::ZProber),
            }
        }
    }

    #[test]
    fn missing_scheme_is_a_parameter_error() {
        let err = run_game(&spec(ExperimentKind::Cd, None, AdversaryKind::HonestDeleter)).unwrap_err();
        assert!(matches!(err, GameError::Parameter(_)));
    }

    #[test]
    fn jobs_do_not_change_results() {
        let mut s = spec(ExperimentKind::Cd, Some(SchemeTag::PriVcd), AdversaryKind::Fuzz);
        let a = run_game(&s).unwrap();
        s.jobs = 3;
        let b = run_game(&s).unwrap();
        assert_eq!(a.advantage, b.advantage);
        assert_eq!(a.transcripts, b.transcripts);
    }
}
