use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Parameterized;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Affine map `y = x W + b` applied row-wise to a `[batch × in]` input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// `[in × out]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl Linear {
    /// Fan-in scaled uniform initialization, `U(-1/√in, 1/√in)`.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let w = (0..inputs * outputs)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        let b = (0..outputs).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            weight: Tensor::matrix(inputs, outputs, w).expect("sized buffer"),
            bias: Tensor::vector(b),
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[inputs, outputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    /// Square identity map with zero bias.
    pub fn identity(width: usize) -> Self {
        let mut l = Self::zeros(width, width);
        for i in 0..width {
            l.weight.set(i, i, 1.0);
        }
        l
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.inputs() {
            return Err(Error::shape("Linear::forward", &[self.inputs()], &[x.cols()]));
        }
        let mut y = x.matmul(&self.weight)?;
        y.add_row_vector(&self.bias)?;
        Ok(y)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Tensor, dy: &Tensor, grad: &mut Linear) -> Result<Tensor> {
        if dy.cols() != self.outputs() || dy.rows() != x.rows() {
            return Err(Error::shape(
                "Linear::backward",
                &[x.rows(), self.outputs()],
                dy.shape(),
            ));
        }
        grad.weight.add_assign(&x.t_matmul(dy)?)?;
        grad.bias.add_assign(&dy.sum_rows())?;
        dy.matmul_t(&self.weight)
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.inputs(), self.outputs())
    }
}
