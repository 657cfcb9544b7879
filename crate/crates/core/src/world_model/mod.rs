//! Latent dynamics model for boosted critic targets and imagined rollouts.

pub mod config;
pub mod imagine;
pub mod rssm;
pub mod targets;

pub use config::WmConfig;
pub use imagine::{imagination_loss, imagine, lowest_fraction, select_low_uncertainty, Imagined};
pub use rssm::{gaussian_kl, GaussParams, Prediction, RssmState, SeqBatch, WmLoss, WorldModel};
pub use targets::boosted_targets;
