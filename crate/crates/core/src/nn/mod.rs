//! Small fixed-architecture networks with hand-derived gradients.
//!
//! Every network type doubles as its own gradient container: `zeros_like`
//! yields a value of the same shape that `backward` accumulates into, and
//! [`Adam`] walks parameters and gradients in matching order.

mod adam;
pub mod gaussian;
pub mod gradcheck;
mod gru;
mod linear;
mod mlp;

pub use adam::{Adam, AdamConfig};
pub use gru::{GruCache, GruCell, RecurrentSpec};
pub use linear::Linear;
pub use mlp::{Activation, Mlp, MlpCache, MlpSpec};

use crate::tensor::Tensor;

/// A value whose trainable state is a fixed, ordered list of tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    /// A same-shaped value with every parameter set to zero.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    fn zero_grad(&mut self) {
        for t in self.params_mut() {
            t.fill(0.0);
        }
    }

    /// Largest absolute difference between corresponding parameters.
    fn max_abs_diff(&self, other: &Self) -> f64
    where
        Self: Sized,
    {
        self.params()
            .iter()
            .zip(other.params())
            .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Concatenated copy of all parameters.
    fn flat(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }
}

/// Multiplies every parameter by `k`, e.g. to average accumulated gradients.
pub fn scale_params<P: Parameterized>(p: &mut P, k: f64) {
    for t in p.params_mut() {
        t.data_mut().iter_mut().for_each(|x| *x *= k);
    }
}

/// Global L2 norm over all parameters.
pub fn global_norm<P: Parameterized>(p: &P) -> f64 {
    p.params()
        .iter()
        .flat_map(|t| t.data().iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}
