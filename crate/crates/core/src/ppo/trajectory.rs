//! Stored rollout transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub pre_squash: Vec<f64>,
    pub noise: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub next_state: Vec<f64>,
    /// Behavior-policy log-density of `action`.
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if !t.log_prob.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite log-prob {}", t.log_prob)));
        }
        if let Some(first) = self.steps.first() {
            if t.state.len() != first.state.len()
                || t.next_state.len() != first.state.len()
                || t.action.len() != first.action.len()
                || t.pre_squash.len() != first.action.len()
                || t.noise.len() != first.action.len()
            {
                return Err(Error::InvalidArgument("transition widths differ from the first".into()));
            }
        }
        self.steps.push(t);
        Ok(())
    }

    pub fn extend(&mut self, other: Trajectory) -> Result<()> {
        for t in other.steps {
            self.push(t)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn stack(&self, f: impl Fn(&Transition) -> &[f64]) -> Result<Tensor> {
        if self.steps.is_empty() {
            return Err(Error::EmptyInput("trajectory".into()));
        }
        let cols = f(&self.steps[0]).len();
        let data = self.steps.iter().flat_map(|t| f(t).iter().copied()).collect();
        Tensor::matrix(self.steps.len(), cols, data)
    }

    pub fn states(&self) -> Result<Tensor> {
        self.stack(|t| &t.state)
    }

    pub fn next_states(&self) -> Result<Tensor> {
        self.stack(|t| &t.next_state)
    }

    pub fn actions(&self) -> Result<Tensor> {
        self.stack(|t| &t.action)
    }

    pub fn pre_squash(&self) -> Result<Tensor> {
        self.stack(|t| &t.pre_squash)
    }

    pub fn noise(&self) -> Result<Tensor> {
        self.stack(|t| &t.noise)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|t| t.reward).collect()
    }

    pub fn dones(&self) -> Vec<bool> {
        self.steps.iter().map(|t| t.done).collect()
    }

    pub fn log_probs(&self) -> Vec<f64> {
        self.steps.iter().map(|t| t.log_prob).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|t| t.value).collect()
    }
}
