//! Uncertainty-gated latent rollouts and the auxiliary actor loss.

use rand::Rng;

use super::rssm::WorldModel;
use crate::error::{Error, Result};
use crate::ppo::{normalize, weighted_log_lik, Actor, Critic, WeightedLogLik};
use crate::tensor::Tensor;

/// Indices of the `round(fraction · n)` lowest scores, ties broken by index.
pub fn lowest_fraction(scores: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside [0, 1]")));
    }
    let keep = (fraction * scores.len() as f64).round() as usize;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    idx.truncate(keep);
    idx.sort_unstable();
    Ok(idx)
}

/// Row indices of the states whose posterior-to-prior KL is in the lowest `fraction`.
pub fn select_low_uncertainty(wm: &WorldModel, states: &Tensor, fraction: f64) -> Result<Vec<usize>> {
    if states.rows() == 0 {
        return Ok(Vec::new());
    }
    lowest_fraction(&wm.uncertainty(states)?, fraction)
}

/// Imagined rollouts, stored row-major as trajectory `j`, step `t` at row `j·H + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Imagined {
    pub horizon: usize,
    pub states: Tensor,
    pub pre_squash: Tensor,
    pub rewards: Vec<f64>,
    /// Critic value at every imagined state.
    pub values: Vec<f64>,
    /// Decoded observations `S_H` that the returns bootstrap from.
    pub final_states: Tensor,
    /// Per-trajectory return `Σ γ^t R_t + γ^H V(S_H)`.
    pub returns: Vec<f64>,
}

impl Imagined {
    pub fn num_trajectories(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Fixed-weight log-likelihood term whose value is
    /// `η · mean_t(−(G − V(S_t)) log π(A_t | S_t))`.
    pub fn loss_term(&self, eta: f64) -> WeightedLogLik {
        self.weighted(eta, self.advantages())
    }

    /// As [`Imagined::loss_term`] with `G − V` standardized over all imagined steps.
    pub fn normalized_loss_term(&self, eta: f64) -> WeightedLogLik {
        self.weighted(eta, normalize(&self.advantages()))
    }

    /// `G − V(S_t)` per imagined step.
    pub fn advantages(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.returns[i / self.horizon] - v)
            .collect()
    }

    fn weighted(&self, eta: f64, adv: Vec<f64>) -> WeightedLogLik {
        let m = adv.len().max(1) as f64;
        let weights = adv.into_iter().map(|a| eta * a / m).collect();
        WeightedLogLik {
            states: self.states.clone(),
            pre_squash: self.pre_squash.clone(),
            weights,
        }
    }
}

/// `H`-step prior rollouts from the posterior at each start state, with
/// actions drawn from `actor` and a critic bootstrap at `S_H`.
///
/// Step 0 uses the real start state as the actor input; later steps use
/// decoded observations.
pub fn imagine<R: Rng + ?Sized>(
    wm: &WorldModel,
    starts: &Tensor,
    actor: &Actor,
    critic: &Critic,
    horizon: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<Imagined> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("imagination horizon must be ≥ 1".into()));
    }
    let n = starts.rows();
    let od = wm.obs_dim;
    let ad = actor.action_dim();
    if n == 0 {
        return Ok(Imagined {
            horizon,
            states: Tensor::zeros(&[0, od]),
            pre_squash: Tensor::zeros(&[0, ad]),
            rewards: Vec::new(),
            values: Vec::new(),
            final_states: Tensor::zeros(&[0, od]),
            returns: Vec::new(),
        });
    }
    let noise = wm.draw_noise(n, 1, rng).remove(0);
    let mut state = wm.start_states(starts, &noise)?;
    let mut obs = starts.clone();
    let mut states = Tensor::zeros(&[n * horizon, od]);
    let mut pre_squash = Tensor::zeros(&[n * horizon, ad]);
    let mut rewards = vec![0.0; n * horizon];
    for t in 0..horizon {
        let mut actions = Tensor::zeros(&[n, ad]);
        for j in 0..n {
            let s = actor.sample(obs.row(j), rng)?;
            actions.row_mut(j).copy_from_slice(&s.action);
            pre_squash.row_mut(j * horizon + t).copy_from_slice(&s.pre_squash);
            states.row_mut(j * horizon + t).copy_from_slice(obs.row(j));
        }
        let noise = wm.draw_noise(n, 1, rng).remove(0);
        state = wm.rssm_step(&state, &actions, None, &noise)?;
        let dec = wm.decode(&state)?;
        let parts = dec.split_cols(&[od, 1, 1]);
        for j in 0..n {
            rewards[j * horizon + t] = parts[1].data()[j];
        }
        obs = parts[0].clone();
    }
    let values = critic.values(&states)?;
    let bootstrap = critic.values(&obs)?;
    let returns = (0..n)
        .map(|j| {
            let mut g = 0.0;
            let mut w = 1.0;
            for t in 0..horizon {
                g += w * rewards[j * horizon + t];
                w *= gamma;
            }
            g + w * bootstrap[j]
        })
        .collect();
    Ok(Imagined {
        horizon,
        states,
        pre_squash,
        rewards,
        values,
        final_states: obs,
        returns,
    })
}

/// `η · mean over imagined steps of −(G − V(S_t)) log π(A_t | S_t)` with
/// `G − V` held fixed; zero for an empty set.
pub fn imagination_loss(imagined: &Imagined, actor: &Actor, eta: f64) -> Result<f64> {
    if imagined.is_empty() {
        return Ok(0.0);
    }
    weighted_log_lik(actor, &imagined.loss_term(eta))
}
