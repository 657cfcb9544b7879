use serde::{Deserialize, Serialize};

use super::Parameterized;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Adaptive-moment optimizer with bias-corrected first and second moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new<P: Parameterized>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Tensor> = params.params().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step<P: Parameterized>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .params_mut()
            .into_iter()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for (((p, &g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;

    fn scalar(x: f64) -> Linear {
        let mut l = Linear::zeros(1, 1);
        l.weight.data_mut()[0] = x;
        l
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar(1.5);
        let mut opt = Adam::new(AdamConfig::with_lr(0.1), &p);
        let g = p.zeros_like();
        for _ in 0..10 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p.weight.data()[0], 1.5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar(0.0);
        let mut opt = Adam::new(AdamConfig::with_lr(1e-3), &p);
        let g = scalar(1.0);
        opt.step(&mut p, &g);
        assert!((p.weight.data()[0] + 1e-3).abs() < 1e-10);
    }

    /// Minimizes `(x − 3)²` from `x = 0`.
    #[test]
    fn converges_on_quadratic() {
        let mut p = scalar(0.0);
        let mut opt = Adam::new(AdamConfig::with_lr(1e-2), &p);
        for _ in 0..10_000 {
            let x = p.weight.data()[0];
            let g = scalar(2.0 * (x - 3.0));
            opt.step(&mut p, &g);
        }
        assert!((p.weight.data()[0] - 3.0).abs() < 1e-6, "{}", p.weight.data()[0]);
    }
}
