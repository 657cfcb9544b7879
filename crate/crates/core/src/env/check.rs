//! Randomized sanity checks of simulator invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::SystemConfig;
use super::mec::{Action, MecEnv, StepOutcome};
use super::physics::uplink_rate;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvCheckReport {
    pub seed: u64,
    pub steps: usize,
    pub checks: Vec<CheckResult>,
}

impl EnvCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.cases += 1;
        self.failures += usize::from(!ok);
    }

    fn finish(self, name: &'static str) -> CheckResult {
        CheckResult { name, passed: self.failures == 0, cases: self.cases, failures: self.failures }
    }
}

fn random_action<R: Rng>(limits: &[f64], rng: &mut R) -> Action {
    Action {
        alpha: limits.iter().map(|_| rng.random::<f64>()).collect(),
        power_w: limits.iter().map(|&p| rng.random::<f64>() * p).collect(),
    }
}

/// Runs every check for `steps` random-action slots of `cfg` under `seed`.
pub fn run_env_checks(cfg: &SystemConfig, seed: u64, steps: usize) -> Result<EnvCheckReport> {
    let cfg = SystemConfig { seed, ..cfg.clone() };
    let mut env = MecEnv::from_config(&cfg)?;
    let mut twin = MecEnv::from_config(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = env.power_limits();
    let p = env.params().clone();

    let mut latency = Tally::default();
    let mut reward = Tally::default();
    let mut extremes = Tally::default();
    let mut determinism = Tally::default();
    let mut interference = Tally::default();
    let mut energy = Tally::default();

    let mut outcomes: Vec<StepOutcome> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut action = random_action(&limits, &mut rng);
        if rng.random_bool(0.2) {
            for (i, a) in action.alpha.iter_mut().enumerate() {
                *a = (i % 2) as f64;
            }
        }
        let out = env.step(&action)?;
        let again = twin.step(&action)?;
        determinism.record(out == again);
        for m in &out.mlus {
            latency.record(m.latency == m.l_local.max(m.l_off + m.l_mec));
            energy.record(m.e_local.is_finite() && m.e_off.is_finite() && m.e_local >= 0.0 && m.e_off >= 0.0);
            if m.alpha == 0.0 {
                extremes.record(m.e_off == 0.0 && m.l_off == 0.0 && m.l_mec == 0.0);
            } else if m.alpha == 1.0 {
                extremes.record(m.l_local == 0.0 && m.e_local == 0.0);
            }
        }
        let positive = out.reward > 0.0 && out.reward.is_finite();
        let identity = out.penalty.total() != 0.0 || out.reward == 1.0 / out.total_latency();
        reward.record(positive && identity);
        if out.done {
            env.reset();
            twin.reset();
        }
        outcomes.push(out);
    }

    for out in &outcomes {
        let gains: Vec<f64> = out.mlus.iter().map(|m| m.gain).collect();
        let powers: Vec<f64> = out.mlus.iter().map(|m| m.power_w).collect();
        for k in 0..gains.len() {
            for j in (0..gains.len()).filter(|&j| j != k) {
                let base = uplink_rate(k, &powers, &gains, p.bandwidth_hz, p.noise_w);
                let mut louder = powers.clone();
                louder[j] += 0.1 * limits[j].max(1e-3);
                let worse = uplink_rate(k, &louder, &gains, p.bandwidth_hz, p.noise_w);
                interference.record(powers[k] == 0.0 || worse < base);
            }
        }
    }

    Ok(EnvCheckReport {
        seed,
        steps,
        checks: vec![
            latency.finish("latency_is_max_of_branches"),
            reward.finish("reward_positive_and_inverse_latency_without_penalty"),
            extremes.finish("extreme_ratios_zero_other_branch"),
            determinism.finish("seed_determinism"),
            interference.finish("rate_decreases_with_interference"),
            energy.finish("energy_reported_finite_nonnegative"),
        ],
    })
}
