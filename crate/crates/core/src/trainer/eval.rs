//! Deterministic evaluation of learned and static policies.

use serde::{Deserialize, Serialize};

use super::config::{stream_rng, stream_seed, Baseline, Stream};
use super::rollout::{collect, EpisodeStats, Policy};
use crate::env::{MecEnv, SystemParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: Baseline,
    pub seed: u64,
    pub episodes: usize,
    pub latency_mean: f64,
    pub latency_se: f64,
    pub reward_mean: f64,
    pub accuracy_mean: f64,
    pub accuracy_se: f64,
    pub hallucination_mean: f64,
    pub hallucination_se: f64,
    pub energy_mean: f64,
    pub alpha_mean: f64,
    /// Share of episodes whose mean accuracy meets the floor.
    pub accuracy_satisfied: f64,
    /// Share of episodes whose mean hallucination stays under the cap.
    pub hallucination_satisfied: f64,
    pub both_satisfied: f64,
    /// Share of slots with an energy overrun.
    pub energy_violation_rate: f64,
    pub per_episode: Vec<EpisodeStats>,
}

/// `(mean, standard error)` with the sample standard deviation.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl EvalReport {
    pub fn from_episodes(policy: Baseline, seed: u64, params: &SystemParams, eps: Vec<EpisodeStats>) -> Self {
        let col = |f: fn(&EpisodeStats) -> f64| eps.iter().map(f).collect::<Vec<_>>();
        let share = |ok: &dyn Fn(&EpisodeStats) -> bool| {
            eps.iter().filter(|e| ok(e)).count() as f64 / eps.len().max(1) as f64
        };
        let (latency_mean, latency_se) = mean_se(&col(|e| e.latency));
        let (accuracy_mean, accuracy_se) = mean_se(&col(|e| e.accuracy));
        let (hallucination_mean, hallucination_se) = mean_se(&col(|e| e.hallucination));
        let (a_min, h_max) = (params.a_min, params.h_max);
        Self {
            policy,
            seed,
            episodes: eps.len(),
            latency_mean,
            latency_se,
            reward_mean: mean_se(&col(|e| e.reward)).0,
            accuracy_mean,
            accuracy_se,
            hallucination_mean,
            hallucination_se,
            energy_mean: mean_se(&col(|e| e.energy)).0,
            alpha_mean: mean_se(&col(|e| e.alpha)).0,
            accuracy_satisfied: share(&|e| e.accuracy >= a_min),
            hallucination_satisfied: share(&|e| e.hallucination <= h_max),
            both_satisfied: share(&|e| e.accuracy >= a_min && e.hallucination <= h_max),
            energy_violation_rate: mean_se(&col(|e| e.energy_violation_rate)).0,
            per_episode: eps,
        }
    }
}

/// Rolls out `policy` for `episodes` episodes on a fresh environment seeded
/// from the evaluation stream of `seed`.
pub fn evaluate(
    policy: Policy<'_>,
    name: Baseline,
    params: &SystemParams,
    seed: u64,
    episodes: usize,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one episode".into()));
    }
    if let Policy::Stochastic(_) = policy {
        return Err(Error::InvalidArgument("evaluation uses deterministic policies".into()));
    }
    let mut env = MecEnv::new(params.clone(), stream_seed(seed, Stream::Eval));
    // Deterministic policies never draw from this generator.
    let mut rng = stream_rng(seed, Stream::Eval);
    let eps = (0..episodes)
        .map(|_| collect(&mut env, policy, None, params.slots, &mut rng).map(|(_, s)| s))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_episodes(name, seed, params, eps))
}

/// Evaluates one of the static policies.
pub fn run_baseline(baseline: Baseline, params: &SystemParams, seed: u64, episodes: usize) -> Result<EvalReport> {
    let policy = match baseline {
        Baseline::AlwaysLocal => Policy::AlwaysLocal,
        Baseline::AlwaysOffload => Policy::AlwaysOffload,
        other => return Err(Error::InvalidArgument(format!("{other} is not a static baseline"))),
    };
    evaluate(policy, baseline, params, seed, episodes)
}
