//! Multi-user edge offloading simulator.

pub mod check;
pub mod config;
pub mod mec;
pub mod physics;
pub mod qos;
pub mod trace;

pub use check::{run_env_checks, CheckResult, EnvCheckReport};
pub use config::{SystemConfig, SystemParams};
pub use mec::{observation_dim, Action, EnvState, MecEnv, MluDiagnostics, StepOutcome};
pub use physics::Penalty;
