//! Toy residual classifier with named structural groups.
//!
//! ```text
//! x₀ = input                                  (embedding dims: E)
//! x_{l+1} = x_l + tanh(x_l U_l + c_l) D_l + d_l   for each block l
//! logits = x_L R + r
//! ```
//!
//! Each block has `hidden` neurons split evenly into `heads` groups, so the
//! network exposes layers, neurons, heads and embedding dimensions as
//! prunable components.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Linear, Parameterized};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyNetSpec {
    pub embed: usize,
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub classes: usize,
}

impl Default for ToyNetSpec {
    fn default() -> Self {
        Self {
            embed: 8,
            hidden: 16,
            heads: 4,
            layers: 2,
            classes: 4,
        }
    }
}

impl ToyNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.embed == 0 || self.hidden == 0 || self.layers == 0 || self.classes < 2 {
            return Err(Error::InvalidConfig("toy network dimensions must be positive".into()));
        }
        if self.heads == 0 || self.hidden % self.heads != 0 {
            return Err(Error::InvalidConfig(format!(
                "hidden width {} is not divisible into {} heads",
                self.hidden, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_size(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn head_of(&self, neuron: usize) -> usize {
        neuron / self.head_size()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// `[embed × hidden]`
    pub up: Linear,
    /// `[hidden × embed]`
    pub down: Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyNet {
    pub spec: ToyNetSpec,
    pub blocks: Vec<Block>,
    /// `[embed × classes]`
    pub readout: Linear,
}

/// Multiplicative gates on structural components; all ones is the plain network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gates {
    pub embed: Vec<f64>,
    /// `[layer][neuron]`
    pub neuron: Vec<Vec<f64>>,
    pub layer: Vec<f64>,
}

impl Gates {
    pub fn ones(spec: &ToyNetSpec) -> Self {
        Self {
            embed: vec![1.0; spec.embed],
            neuron: vec![vec![1.0; spec.hidden]; spec.layers],
            layer: vec![1.0; spec.layers],
        }
    }
}

/// Intermediate values for [`ToyNet::backward`].
#[derive(Clone, Debug)]
pub struct ToyCache {
    /// Residual stream entering each block, plus the final stream.
    streams: Vec<Tensor>,
    /// Hidden activations per block.
    hidden: Vec<Tensor>,
}

impl ToyNet {
    pub fn new<R: Rng + ?Sized>(spec: ToyNetSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let blocks = (0..spec.layers)
            .map(|_| Block {
                up: Linear::new(spec.embed, spec.hidden, rng),
                down: Linear::new(spec.hidden, spec.embed, rng),
            })
            .collect();
        Ok(Self {
            spec,
            blocks,
            readout: Linear::new(spec.embed, spec.classes, rng),
        })
    }

    /// Draws `n` standard-normal input rows.
    pub fn sample_inputs<R: Rng + ?Sized>(spec: &ToyNetSpec, n: usize, rng: &mut R) -> Tensor {
        let data = (0..n * spec.embed).map(|_| rng.sample(StandardNormal)).collect();
        Tensor::matrix(n, spec.embed, data).expect("sized buffer")
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.cols() != self.spec.embed {
            return Err(Error::shape("ToyNet::forward", &[self.spec.embed], &[x.cols()]));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x)?.0)
    }

    /// Forward pass with component gates applied to activations.
    pub fn forward_gated(&self, x: &Tensor, gates: &Gates) -> Result<Tensor> {
        self.check_input(x)?;
        let embed_gate = Tensor::vector(gates.embed.clone());
        let mut stream = x.clone();
        gate_columns(&mut stream, &embed_gate);
        for (l, block) in self.blocks.iter().enumerate() {
            let mut h = block.up.forward(&stream)?.map(f64::tanh);
            gate_columns(&mut h, &Tensor::vector(gates.neuron[l].clone()));
            let mut out = block.down.forward(&h)?;
            gate_columns(&mut out, &embed_gate);
            let lg = gates.layer[l];
            stream = stream.zip_map(&out, |s, o| s + lg * o)?;
        }
        self.readout.forward(&stream)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, ToyCache)> {
        self.check_input(x)?;
        let mut streams = vec![x.clone()];
        let mut hidden = Vec::with_capacity(self.blocks.len());
        let mut stream = x.clone();
        for block in &self.blocks {
            let h = block.up.forward(&stream)?.map(f64::tanh);
            let out = block.down.forward(&h)?;
            stream = stream.add(&out)?;
            hidden.push(h);
            streams.push(stream.clone());
        }
        let logits = self.readout.forward(&stream)?;
        Ok((logits, ToyCache { streams, hidden }))
    }

    /// Accumulates gradients of the loss with upstream `d_logits` into `grad`.
    pub fn backward(&self, cache: &ToyCache, d_logits: &Tensor, grad: &mut ToyNet) -> Result<()> {
        let last = cache.streams.len() - 1;
        let mut d_stream = self
            .readout
            .backward(&cache.streams[last], d_logits, &mut grad.readout)?;
        for l in (0..self.blocks.len()).rev() {
            let block = &self.blocks[l];
            let gb = &mut grad.blocks[l];
            let dh = block.down.backward(&cache.hidden[l], &d_stream, &mut gb.down)?;
            let d_pre = dh.zip_map(&cache.hidden[l], |g, h| g * (1.0 - h * h))?;
            let dx = block.up.backward(&cache.streams[l], &d_pre, &mut gb.up)?;
            d_stream.add_assign(&dx)?;
        }
        Ok(())
    }

    /// Class predicted for each input row.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let logits = self.forward(x)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }

    /// Fraction of rows classified as `labels`.
    pub fn accuracy(&self, x: &Tensor, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        if pred.len() != labels.len() || labels.is_empty() {
            return Err(Error::shape("ToyNet::accuracy", &[pred.len()], &[labels.len()]));
        }
        let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }

    /// Multiply-accumulate operations per input row, counting only nonzero weights.
    pub fn active_macs(&self) -> usize {
        let mut total = self.readout.weight.count_nonzero();
        for b in &self.blocks {
            total += b.up.weight.count_nonzero() + b.down.weight.count_nonzero();
        }
        total
    }
}

impl Parameterized for ToyNet {
    fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend(b.up.params());
            out.extend(b.down.params());
        }
        out.extend(self.readout.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            out.extend(b.up.params_mut());
            out.extend(b.down.params_mut());
        }
        out.extend(self.readout.params_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            spec: self.spec,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block {
                    up: b.up.zeros_like(),
                    down: b.down.zeros_like(),
                })
                .collect(),
            readout: self.readout.zeros_like(),
        }
    }
}

fn gate_columns(t: &mut Tensor, gate: &Tensor) {
    for r in 0..t.rows() {
        for (x, g) in t.row_mut(r).iter_mut().zip(gate.data()) {
            *x *= g;
        }
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
