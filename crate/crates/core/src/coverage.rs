//! Monte Carlo coverage of the interval constructions against known truths.
//!
//! Replication `r` uses stream `r` of the generator seeded with the base
//! seed, so results do not depend on thread scheduling. For the anytime
//! regime a replication covers only if the truth lies in every interval of
//! the sequence up to the horizon, i.e. in their running intersection.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{check_delta, lil_halfwidth, BoundsError, Radius};
use crate::counts::{dyadic_floor, CountError, CountTable};
use crate::effects::{compute, true_effect, EffectError, EffectQuery, Regime, TruthError};
use crate::prediction::{prediction_set, PredictionError};
use crate::simulator::{replication_rng, u01, CausalModel, ModelError, PolicySpec, Sampler, PRNG_ID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error(transparent)]
    Truth(#[from] TruthError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Counts(#[from] CountError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("a treatment policy only applies to the adaptive-fixed and anytime regimes")]
    PolicyWithIid,
    #[error("at least one replication is required")]
    NoReplications,
    #[error("success probability {0} is outside [0, 1]")]
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub query: EffectQuery,
    /// Treatment policy for the adaptive regimes; defaults to `adversarial-alternating`.
    pub policy: Option<PolicySpec>,
    pub n: u64,
    pub replications: u64,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub format_version: u32,
    pub prng: &'static str,
    pub theorem: u8,
    pub criterion: crate::effects::Criterion,
    pub regime: Regime,
    pub policy: Option<String>,
    pub delta: f64,
    pub n: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub truth: f64,
    pub covered: u64,
    pub coverage: f64,
    pub mc_se: f64,
    /// Over replications whose final half-width is finite; `null` if none is.
    pub mean_final_halfwidth: Option<f64>,
    pub median_final_halfwidth: Option<f64>,
    pub unbounded_fraction: f64,
}

impl CoverageReport {
    /// `coverage ≥ 1 − δ − k · s.e.`
    pub fn meets_nominal(&self, k: f64) -> bool {
        self.coverage >= 1.0 - self.delta - k * self.mc_se
    }

    /// Fixed-width text table.
    pub fn summary(&self) -> String {
        let hw = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |h| format!("{h:.4}"));
        format!(
            "{:<8} {:<10} {:<15} {:>6} {:>7} {:>8} {:>8} {:>8} {:>9} {:>9}\n{:<8} {:<10} {:<15} {:>6} {:>7} {:>8.4} {:>8.4} {:>8.4} {:>9} {:>9}\n",
            "theorem", "criterion", "regime", "n", "reps", "truth", "cover", "mc_se", "mean_hw", "unbounded",
            self.theorem,
            self.criterion.to_string(),
            self.regime.to_string(),
            self.n,
            self.replications,
            self.truth,
            self.coverage,
            self.mc_se,
            hw(self.mean_final_halfwidth),
            format!("{:.3}", self.unbounded_fraction),
        )
    }
}

pub fn mc_standard_error(coverage: f64, replications: u64) -> f64 {
    (coverage * (1.0 - coverage) / replications as f64).sqrt()
}

struct Replication {
    covered: bool,
    final_halfwidth: Radius,
}

fn one_replication(
    model: &CausalModel,
    config: &CoverageConfig,
    policy: Option<PolicySpec>,
    truth: f64,
    replication: u64,
) -> Result<Replication, CoverageError> {
    let mut rng = replication_rng(config.base_seed, replication);
    let schema = model.schema()?;
    let mut table = CountTable::new(&schema);
    let mut sampler = Sampler::new(model)?;
    let mut policy = policy.map(|p| p.build(model)).transpose()?;
    let anytime = config.query.regime == Regime::Anytime;
    let mut covered = true;
    let mut signature = Vec::new();
    let mut last = None;
    for _ in 0..config.n {
        let obs = match policy.as_mut() {
            Some(p) => sampler.step_adaptive(p.as_mut(), &mut rng)?,
            None => sampler.step_iid(&mut rng),
        };
        table.ingest(&obs)?;
        if anytime {
            let sig = table.dyadic_signature();
            if sig != signature {
                signature = sig;
                let iv = compute(&table, &config.query)?;
                covered &= iv.contains(truth);
                last = Some(iv);
            }
        }
    }
    let final_iv = match last {
        Some(iv) => iv,
        None => compute(&table, &config.query)?,
    };
    if !anytime {
        covered = final_iv.contains(truth);
    }
    Ok(Replication {
        covered,
        final_halfwidth: final_iv.halfwidth,
    })
}

/// Runs `replications` independent streams and records how often the
/// construction contains the model's true effect.
pub fn run_coverage(model: &CausalModel, config: &CoverageConfig) -> Result<CoverageReport, CoverageError> {
    check_delta(config.query.delta)?;
    if config.replications == 0 {
        return Err(CoverageError::NoReplications);
    }
    let policy = match (config.query.regime, config.policy) {
        (Regime::Iid, None) => None,
        (Regime::Iid, Some(_)) => return Err(CoverageError::PolicyWithIid),
        (_, p) => Some(p.unwrap_or(PolicySpec::AdversarialAlternating)),
    };
    let roles = model.roles().ok_or(ModelError::NoRoles)?;
    let q = &config.query;
    let truth = true_effect(model, roles, q.treatment_value, q.outcome_value, q.criterion)?;
    // Surface configuration errors before spawning work.
    q.validate(&CountTable::new(&model.schema()?))?;

    let runs = (0..config.replications)
        .into_par_iter()
        .map(|r| one_replication(model, config, policy, truth, r))
        .collect::<Result<Vec<_>, _>>()?;

    let covered = runs.iter().filter(|r| r.covered).count() as u64;
    let coverage = covered as f64 / config.replications as f64;
    let mut finite: Vec<f64> = runs.iter().filter_map(|r| r.final_halfwidth.finite()).collect();
    finite.sort_by(f64::total_cmp);
    let unbounded = runs.len() - finite.len();
    Ok(CoverageReport {
        format_version: crate::FORMAT_VERSION,
        prng: PRNG_ID,
        theorem: q.theorem(),
        criterion: q.criterion,
        regime: q.regime,
        policy: policy.map(|p| p.to_string()),
        delta: q.delta,
        n: config.n,
        replications: config.replications,
        base_seed: config.base_seed,
        truth,
        covered,
        coverage,
        mc_se: mc_standard_error(coverage, config.replications),
        mean_final_halfwidth: mean(&finite),
        median_final_halfwidth: median(&finite),
        unbounded_fraction: unbounded as f64 / runs.len() as f64,
    })
}

fn mean(sorted: &[f64]) -> Option<f64> {
    (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64)
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionCoverageReport {
    pub format_version: u32,
    pub prng: &'static str,
    pub policy: String,
    pub delta: f64,
    pub n: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub misses: u64,
    pub miss_rate: f64,
    pub mc_se: f64,
    pub mean_set_size: f64,
}

impl PredictionCoverageReport {
    /// `miss_rate ≤ δ + k · s.e.`
    pub fn meets_nominal(&self, k: f64) -> bool {
        self.miss_rate <= self.delta + k * self.mc_se
    }
}

/// Builds the prediction set from an adaptive stream of length `n`, then
/// draws one outcome with the treatment set to `x_tilde` and records misses.
pub fn run_prediction_coverage(
    model: &CausalModel,
    x_tilde: usize,
    delta: f64,
    policy: PolicySpec,
    n: u64,
    replications: u64,
    base_seed: u64,
) -> Result<PredictionCoverageReport, CoverageError> {
    check_delta(delta)?;
    if replications == 0 {
        return Err(CoverageError::NoReplications);
    }
    let schema = model.schema()?;
    let runs = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(base_seed, r);
            let mut sampler = Sampler::new(model)?;
            let mut p = policy.build(model)?;
            let mut table = CountTable::new(&schema);
            for _ in 0..n {
                table.ingest(&sampler.step_adaptive(p.as_mut(), &mut rng)?)?;
            }
            let gamma = prediction_set(&table, x_tilde, delta)?;
            let y = sampler.intervened_outcome(x_tilde, &mut rng);
            Ok((!gamma.contains(y), gamma.members.len()))
        })
        .collect::<Result<Vec<_>, CoverageError>>()?;
    let misses = runs.iter().filter(|r| r.0).count() as u64;
    let miss_rate = misses as f64 / replications as f64;
    Ok(PredictionCoverageReport {
        format_version: crate::FORMAT_VERSION,
        prng: PRNG_ID,
        policy: policy.to_string(),
        delta,
        n,
        replications,
        base_seed,
        misses,
        miss_rate,
        mc_se: mc_standard_error(miss_rate, replications),
        mean_set_size: runs.iter().map(|r| r.1 as f64).sum::<f64>() / replications as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceCoverageReport {
    pub format_version: u32,
    pub prng: &'static str,
    pub p: f64,
    pub delta: f64,
    pub horizon: u64,
    pub replications: u64,
    pub covered: u64,
    pub coverage: f64,
    pub mc_se: f64,
}

impl SequenceCoverageReport {
    pub fn meets_nominal(&self, k: f64) -> bool {
        self.coverage >= 1.0 - self.delta - k * self.mc_se
    }
}

/// Simultaneous coverage of the dyadic iterated-log sequence for a
/// Bernoulli(`p`) mean: a replication covers if `|p − p̂| < r` at every
/// `n ≤ horizon`, where `p̂` is the mean of the first `⌊⌊n⌋⌋` draws.
pub fn run_lil_coverage(
    p: f64,
    delta: f64,
    horizon: u64,
    replications: u64,
    base_seed: u64,
) -> Result<SequenceCoverageReport, CoverageError> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CoverageError::Probability(p));
    }
    if replications == 0 {
        return Err(CoverageError::NoReplications);
    }
    let covered = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(base_seed, r);
            let mut successes = 0u64;
            let mut at_level = 0u64;
            for n in 1..=horizon {
                successes += u64::from(u01(&mut rng) < p);
                if n >= 2 && dyadic_floor(n) == n {
                    at_level = successes;
                }
                let radius = lil_halfwidth(n, delta).expect("delta checked");
                if let Some(rad) = radius.finite() {
                    let m = dyadic_floor(n);
                    if (p - at_level as f64 / m as f64).abs() >= rad {
                        return false;
                    }
                }
            }
            true
        })
        .filter(|&c| c)
        .count() as u64;
    let coverage = covered as f64 / replications as f64;
    Ok(SequenceCoverageReport {
        format_version: crate::FORMAT_VERSION,
        prng: PRNG_ID,
        p,
        delta,
        horizon,
        replications,
        covered,
        coverage,
        mc_se: mc_standard_error(coverage, replications),
    })
}
