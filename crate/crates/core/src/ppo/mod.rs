//! Clipped-surrogate actor-critic with squashed Gaussian actions.

pub mod advantage;
pub mod loss;
pub mod policy;
pub mod trajectory;
pub mod update;

pub use advantage::{gae, normalize, Advantages};
pub use loss::{
    actor_loss, actor_loss_grad, clipped_surrogate, critic_loss, critic_loss_grad, entropy_loss,
    prob_ratio, squashed_entropy, weighted_log_lik, weighted_log_lik_grad, ActorBatch, ActorLoss,
    WeightedLogLik,
};
pub use policy::{Actor, Critic, PolicySample};
pub use trajectory::{Trajectory, Transition};
pub use update::{ppo_update, PpoAgent, PpoBatch, PpoConfig, UpdateReport};
