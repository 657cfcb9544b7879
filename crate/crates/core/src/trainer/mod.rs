//! Training loop, baselines, evaluation, and run outputs.

pub mod config;
pub mod eval;
pub mod output;
pub mod rollout;
pub mod run;

pub use config::{hash_json, stream_rng, stream_seed, Baseline, RunConfig, Stream};
pub use eval::{evaluate, mean_se, run_baseline, EvalReport};
pub use output::{
    checkpoint_path, compare, convergence_iteration, evaluate_checkpoint, map_seeds, metrics_path, train_run,
    train_seed, write_comparison, Comparison, CompareByK, CompareRow, EpisodeRow, SeedRun, SummaryRow,
};
pub use rollout::{collect, EpisodeStats, Policy};
pub use run::{IterationMetrics, Trainer, WmState, CHECKPOINT_VERSION};
