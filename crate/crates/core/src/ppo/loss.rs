//! Clipped surrogate, entropy, critic, and weighted log-likelihood losses with gradients.

use serde::{Deserialize, Serialize};

use super::policy::{Actor, Critic};
use crate::error::{Error, Result};
use crate::nn::gaussian::{log_squash_jacobian, log_squash_jacobian_grad, squashed_log_prob, LN_2PI};
use crate::nn::Parameterized;
use crate::tensor::Tensor;

pub fn prob_ratio(new_log_prob: f64, old_log_prob: f64) -> f64 {
    (new_log_prob - old_log_prob).exp()
}

/// `mean(−min(ρA, clip(ρ, 1−ε, 1+ε)A))`.
pub fn clipped_surrogate(ratios: &[f64], advantages: &[f64], clip: f64) -> Result<f64> {
    if ratios.len() != advantages.len() {
        return Err(Error::shape("clipped_surrogate", &[ratios.len()], &[advantages.len()]));
    }
    if ratios.is_empty() {
        return Err(Error::EmptyInput("clipped_surrogate batch".into()));
    }
    let total: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| -surrogate_term(r, a, clip).0)
        .sum();
    Ok(total / ratios.len() as f64)
}

/// `min(ρA, clip(ρ)A)` and whether the unclipped branch carries the gradient.
fn surrogate_term(ratio: f64, adv: f64, clip: f64) -> (f64, bool) {
    let plain = ratio * adv;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
    if plain <= clipped {
        (plain, true)
    } else {
        (clipped, false)
    }
}

pub fn critic_loss(values: &[f64], targets: &[f64]) -> Result<f64> {
    if values.len() != targets.len() {
        return Err(Error::shape("critic_loss", &[values.len()], &[targets.len()]));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("critic_loss batch".into()));
    }
    let sse: f64 = values.iter().zip(targets).map(|(v, t)| (v - t) * (v - t)).sum();
    Ok(sse / values.len() as f64)
}

/// Mean squared error of the critic on `states` and its parameter gradient.
pub fn critic_loss_grad(critic: &Critic, states: &Tensor, targets: &[f64]) -> Result<(f64, Critic)> {
    let (v, cache) = critic.net.forward_cached(states)?;
    let values = v.data();
    let loss = critic_loss(values, targets)?;
    let n = values.len() as f64;
    let dy: Vec<f64> = values.iter().zip(targets).map(|(v, t)| 2.0 * (v - t) / n).collect();
    let mut grad = critic.zeros_like();
    critic
        .net
        .backward(&cache, &Tensor::matrix(values.len(), 1, dy)?, &mut grad.net)?;
    Ok((loss, grad))
}

/// Per-sample entropy estimate of the squashed policy: the Gaussian entropy
/// plus the log-Jacobian of the squash at `μ + σ ε` for stored noise `ε`.
pub fn squashed_entropy(mean: &[f64], log_std: &[f64], noise: &[f64], scales: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(noise)
        .zip(scales)
        .map(|(((&m, &ls), &e), &s)| {
            0.5 * (1.0 + LN_2PI) + ls + log_squash_jacobian(m + ls.exp() * e, s)
        })
        .sum()
}

/// `−β · mean` of [`squashed_entropy`] over a batch.
pub fn entropy_loss(actor: &Actor, states: &Tensor, noise: &Tensor, coef: f64) -> Result<f64> {
    let means = actor.means(states)?;
    if means.shape() != noise.shape() {
        return Err(Error::shape("entropy_loss", means.shape(), noise.shape()));
    }
    let n = means.rows();
    if n == 0 {
        return Err(Error::EmptyInput("entropy_loss batch".into()));
    }
    let h: f64 = (0..n)
        .map(|r| squashed_entropy(means.row(r), actor.log_std.data(), noise.row(r), &actor.scales))
        .sum();
    Ok(-coef * h / n as f64)
}

/// On-policy minibatch for the actor.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorBatch {
    pub states: Tensor,
    pub pre_squash: Tensor,
    pub noise: Tensor,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl ActorBatch {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    fn check(&self, actor: &Actor) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::EmptyInput("actor batch".into()));
        }
        let d = actor.action_dim();
        let expect = [n, d];
        if self.pre_squash.shape() != expect {
            return Err(Error::shape("ActorBatch::pre_squash", &expect, self.pre_squash.shape()));
        }
        if self.noise.shape() != expect {
            return Err(Error::shape("ActorBatch::noise", &expect, self.noise.shape()));
        }
        if self.states.shape() != [n, actor.obs_dim()] {
            return Err(Error::shape("ActorBatch::states", &[n, actor.obs_dim()], self.states.shape()));
        }
        if self.advantages.len() != n {
            return Err(Error::shape("ActorBatch::advantages", &[n], &[self.advantages.len()]));
        }
        Ok(())
    }
}

/// Extra log-likelihood term `−Σ_j w_j log π(u_j | s_j)` with fixed weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedLogLik {
    pub states: Tensor,
    pub pre_squash: Tensor,
    pub weights: Vec<f64>,
}

impl WeightedLogLik {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Same samples with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            states: self.states.clone(),
            pre_squash: self.pre_squash.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActorLoss {
    pub total: f64,
    pub surrogate: f64,
    /// Mean entropy estimate (not scaled by the coefficient).
    pub entropy: f64,
    pub auxiliary: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Accumulates `dL/dμ` rows and `dL/d log σ` from a per-row `dL/dlogπ`.
fn push_log_prob_grad(
    d_lp: f64,
    u: &[f64],
    mean: &[f64],
    log_std: &[f64],
    d_mean: &mut [f64],
    d_log_std: &mut [f64],
) {
    for j in 0..u.len() {
        let inv_var = (-2.0 * log_std[j]).exp();
        let diff = u[j] - mean[j];
        d_mean[j] += d_lp * diff * inv_var;
        d_log_std[j] += d_lp * (diff * diff * inv_var - 1.0);
    }
}

/// `−Σ w_j log π(u_j | s_j)` and its gradient, accumulated into `grad`.
pub fn weighted_log_lik_grad(actor: &Actor, term: &WeightedLogLik, grad: &mut Actor) -> Result<f64> {
    if term.is_empty() {
        return Ok(0.0);
    }
    let n = term.weights.len();
    let d = actor.action_dim();
    if term.pre_squash.shape() != [n, d] {
        return Err(Error::shape("WeightedLogLik::pre_squash", &[n, d], term.pre_squash.shape()));
    }
    let (means, cache) = actor.net.forward_cached(&term.states)?;
    if means.rows() != n {
        return Err(Error::shape("WeightedLogLik::states", &[n], &[means.rows()]));
    }
    let ls = actor.log_std.data();
    let mut d_means = Tensor::zeros(&[n, d]);
    let mut d_ls = vec![0.0; d];
    let mut loss = 0.0;
    for r in 0..n {
        let u = term.pre_squash.row(r);
        let lp = squashed_log_prob(u, means.row(r), ls, &actor.scales);
        let w = term.weights[r];
        loss -= w * lp;
        push_log_prob_grad(-w, u, means.row(r), ls, d_means.row_mut(r), &mut d_ls);
    }
    actor.net.backward(&cache, &d_means, &mut grad.net)?;
    for (g, v) in grad.log_std.data_mut().iter_mut().zip(&d_ls) {
        *g += v;
    }
    Ok(loss)
}

/// `−Σ w_j log π(u_j | s_j)` without gradients.
pub fn weighted_log_lik(actor: &Actor, term: &WeightedLogLik) -> Result<f64> {
    if term.is_empty() {
        return Ok(0.0);
    }
    let lps = actor.log_probs(&term.states, &term.pre_squash)?;
    Ok(-lps.iter().zip(&term.weights).map(|(lp, w)| w * lp).sum::<f64>())
}

/// Clipped surrogate minus `β ·` entropy, plus an optional weighted
/// log-likelihood term, with the full parameter gradient.
pub fn actor_loss_grad(
    actor: &Actor,
    batch: &ActorBatch,
    clip: f64,
    entropy_coef: f64,
    aux: Option<&WeightedLogLik>,
) -> Result<(ActorLoss, Actor)> {
    batch.check(actor)?;
    let n = batch.len();
    let bn = n as f64;
    let d = actor.action_dim();
    let (means, cache) = actor.net.forward_cached(&batch.states)?;
    let ls = actor.log_std.data();
    let sigma: Vec<f64> = ls.iter().map(|l| l.exp()).collect();

    let mut d_means = Tensor::zeros(&[n, d]);
    let mut d_ls = vec![0.0; d];
    let (mut surr, mut ent, mut clipped, mut kl) = (0.0, 0.0, 0usize, 0.0);
    for r in 0..n {
        let u = batch.pre_squash.row(r);
        let mu = means.row(r);
        let lp = squashed_log_prob(u, mu, ls, &actor.scales);
        let ratio = prob_ratio(lp, batch.old_log_probs[r]);
        let adv = batch.advantages[r];
        let (term, active) = surrogate_term(ratio, adv, clip);
        surr -= term / bn;
        if (ratio - 1.0).abs() > clip {
            clipped += 1;
        }
        kl += (batch.old_log_probs[r] - lp) / bn;
        let dm = d_means.row_mut(r);
        if active {
            push_log_prob_grad(-adv * ratio / bn, u, mu, ls, dm, &mut d_ls);
        }

        let e = batch.noise.row(r);
        ent += squashed_entropy(mu, ls, e, &actor.scales) / bn;
        for j in 0..d {
            let g = log_squash_jacobian_grad(mu[j] + sigma[j] * e[j]);
            dm[j] -= entropy_coef * g / bn;
            d_ls[j] -= entropy_coef * (1.0 + g * sigma[j] * e[j]) / bn;
        }
    }

    let mut grad = actor.zeros_like();
    actor.net.backward(&cache, &d_means, &mut grad.net)?;
    grad.log_std.data_mut().copy_from_slice(&d_ls);
    let auxiliary = match aux {
        Some(term) => weighted_log_lik_grad(actor, term, &mut grad)?,
        None => 0.0,
    };
    let report = ActorLoss {
        total: surr - entropy_coef * ent + auxiliary,
        surrogate: surr,
        entropy: ent,
        auxiliary,
        clip_fraction: clipped as f64 / bn,
        approx_kl: kl,
    };
    Ok((report, grad))
}

/// Scalar value of the loss in [`actor_loss_grad`], computed independently.
pub fn actor_loss(
    actor: &Actor,
    batch: &ActorBatch,
    clip: f64,
    entropy_coef: f64,
    aux: Option<&WeightedLogLik>,
) -> Result<f64> {
    batch.check(actor)?;
    let lps = actor.log_probs(&batch.states, &batch.pre_squash)?;
    let ratios: Vec<f64> = lps
        .iter()
        .zip(&batch.old_log_probs)
        .map(|(&n, &o)| prob_ratio(n, o))
        .collect();
    let surr = clipped_surrogate(&ratios, &batch.advantages, clip)?;
    let ent = entropy_loss(actor, &batch.states, &batch.noise, entropy_coef)?;
    let aux = match aux {
        Some(term) => weighted_log_lik(actor, term)?,
        None => 0.0,
    };
    Ok(surr + ent + aux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_rel_error, numerical_grad};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect())
            .unwrap()
    }

    fn random_batch(actor: &Actor, n: usize, rng: &mut ChaCha8Rng) -> ActorBatch {
        let states = randn(rng, n, actor.obs_dim());
        let noise = randn(rng, n, actor.action_dim());
        let means = actor.means(&states).unwrap();
        let pre = means
            .zip_map(&noise, |m, e| m + 0.6 * e)
            .unwrap();
        let old: Vec<f64> = actor
            .log_probs(&states, &pre)
            .unwrap()
            .iter()
            .map(|lp| lp + rng.random_range(-0.3..0.3))
            .collect();
        ActorBatch {
            states,
            pre_squash: pre,
            noise,
            old_log_probs: old,
            advantages: (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    #[test]
    fn ratio_basics() {
        assert_eq!(prob_ratio(-1.3, -1.3), 1.0);
        assert!((prob_ratio(2f64.ln(), 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn surrogate_examples() {
        let a = [0.5, -1.0, 2.0];
        let loss = clipped_surrogate(&[1.0; 3], &a, 0.1).unwrap();
        assert!((loss + (0.5 - 1.0 + 2.0) / 3.0).abs() < 1e-15);
        // A > 0 with ρ = 1 + 2ε is capped at (1 + ε)A.
        let loss = clipped_surrogate(&[1.2], &[3.0], 0.1).unwrap();
        assert!((loss + 1.1 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn critic_examples() {
        assert_eq!(critic_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((critic_loss(&[1.5, 2.5], &[1.0, 2.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(critic_loss(&[], &[]).is_err());
    }

    #[test]
    fn zero_coef_entropy_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let actor = Actor::new(3, 8, &[2.0], &mut rng).unwrap();
        let b = random_batch(&actor, 4, &mut rng);
        assert_eq!(entropy_loss(&actor, &b.states, &b.noise, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn analytic_and_scalar_losses_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Actor::new(4, 8, &[2.0, 1.0], &mut rng).unwrap();
        let b = random_batch(&actor, 6, &mut rng);
        let aux = WeightedLogLik {
            states: randn(&mut rng, 3, 4),
            pre_squash: randn(&mut rng, 3, 4),
            weights: vec![0.2, -0.1, 0.05],
        };
        let (rep, _) = actor_loss_grad(&actor, &b, 0.1, 0.01, Some(&aux)).unwrap();
        let direct = actor_loss(&actor, &b, 0.1, 0.01, Some(&aux)).unwrap();
        assert!((rep.total - direct).abs() < 1e-12);
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut actor = Actor::new(4, 6, &[2.0, 1.0], &mut rng).unwrap();
        let b = random_batch(&actor, 5, &mut rng);
        let aux = WeightedLogLik {
            states: randn(&mut rng, 3, 4),
            pre_squash: randn(&mut rng, 3, 4),
            weights: vec![0.3, -0.2, 0.1],
        };
        let (_, g) = actor_loss_grad(&actor, &b, 0.2, 0.05, Some(&aux)).unwrap();
        let num = numerical_grad(
            &mut actor,
            |a| actor_loss(a, &b, 0.2, 0.05, Some(&aux)).unwrap(),
            1e-5,
        );
        assert!(max_rel_error(&g, &num) < 1e-4);
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut critic = Critic::new(4, 6, &mut rng).unwrap();
        let s = randn(&mut rng, 5, 4);
        let y: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let (_, g) = critic_loss_grad(&critic, &s, &y).unwrap();
        let num = numerical_grad(&mut critic, |c| critic_loss(&c.values(&s).unwrap(), &y).unwrap(), 1e-5);
        assert!(max_rel_error(&g, &num) < 1e-4);
    }

    #[test]
    fn entropy_grows_with_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut actor = Actor::new(3, 8, &[1.0], &mut rng).unwrap();
        let s = randn(&mut rng, 1, 3);
        let e = Tensor::zeros(&[1, 2]);
        let mut last = f64::NEG_INFINITY;
        for ls in [-2.0, -1.0, 0.0] {
            actor.log_std.fill(ls);
            let h = -entropy_loss(&actor, &s, &e, 1.0).unwrap();
            assert!(h > last);
            last = h;
        }
    }
}
