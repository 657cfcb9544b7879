use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Linear, Parameterized};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Layer widths from input to output, e.g. `[obs, 256, 256, act]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl MlpSpec {
    /// Two hidden layers of `hidden` units.
    pub fn two_layer(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            widths: vec![input, hidden, hidden, output],
            activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::InvalidConfig(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidConfig("MLP widths must be positive".into()));
        }
        Ok(())
    }
}

/// Feed-forward network; hidden layers use the activation, the output is affine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

/// Layer inputs recorded by [`Mlp::forward_cached`].
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Tensor>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .widths
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], rng))
            .collect();
        Ok(Self {
            layers,
            activation: spec.activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            let a = self.activation;
            h = layer.forward(&h.map(|v| a.apply(v)))?;
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, MlpCache)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.clone());
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            let a = self.activation;
            let act = h.map(|v| a.apply(v));
            h = layer.forward(&act)?;
            inputs.push(act);
        }
        Ok((h, MlpCache { inputs }))
    }

    /// Accumulates gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, cache: &MlpCache, dy: &Tensor, grad: &mut Mlp) -> Result<Tensor> {
        let mut d = dy.clone();
        for i in (0..self.layers.len()).rev() {
            let dx = self.layers[i].backward(&cache.inputs[i], &d, &mut grad.layers[i])?;
            if i == 0 {
                return Ok(dx);
            }
            let a = self.activation;
            d = dx.zip_map(&cache.inputs[i], |g, y| g * a.derivative_from_output(y))?;
        }
        unreachable!("an MLP has at least one layer")
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(Linear::zeros_like).collect(),
            activation: self.activation,
        }
    }
}
