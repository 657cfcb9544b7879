use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Parameterized};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentSpec {
    pub input: usize,
    pub hidden: usize,
}

impl RecurrentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("recurrent widths must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Gated recurrent unit. Gate blocks are ordered `[reset, update, candidate]`:
///
/// ```text
/// r  = σ(x Wi_r + bi_r + h Wh_r + bh_r)
/// u  = σ(x Wi_u + bi_u + h Wh_u + bh_u)
/// n  = tanh(x Wi_n + bi_n + r ⊙ (h Wh_n + bh_n))
/// h' = (1 − u) ⊙ n + u ⊙ h
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    /// `[input × 3H]`
    pub w_input: Tensor,
    /// `[H × 3H]`
    pub w_hidden: Tensor,
    pub b_input: Tensor,
    pub b_hidden: Tensor,
}

#[derive(Clone, Debug)]
pub struct GruCache {
    x: Tensor,
    h: Tensor,
    r: Tensor,
    u: Tensor,
    n: Tensor,
    /// `h Wh_n + bh_n`, needed for the reset-gate gradient.
    hn: Tensor,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(spec: RecurrentSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let h = spec.hidden;
        let bound = 1.0 / (h as f64).sqrt();
        let mut uniform = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        Ok(Self {
            w_input: Tensor::matrix(spec.input, 3 * h, uniform(spec.input * 3 * h))?,
            w_hidden: Tensor::matrix(h, 3 * h, uniform(h * 3 * h))?,
            b_input: Tensor::vector(uniform(3 * h)),
            b_hidden: Tensor::vector(uniform(3 * h)),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.rows()
    }

    pub fn step(&self, x: &Tensor, h: &Tensor) -> Result<Tensor> {
        Ok(self.step_cached(x, h)?.0)
    }

    pub fn step_cached(&self, x: &Tensor, h: &Tensor) -> Result<(Tensor, GruCache)> {
        let hd = self.hidden_dim();
        if x.cols() != self.input_dim() {
            return Err(Error::shape("GruCell::step", &[self.input_dim()], &[x.cols()]));
        }
        if h.cols() != hd || h.rows() != x.rows() {
            return Err(Error::shape("GruCell::step", &[x.rows(), hd], h.shape()));
        }
        let mut gi = x.matmul(&self.w_input)?;
        gi.add_row_vector(&self.b_input)?;
        let mut gh = h.matmul(&self.w_hidden)?;
        gh.add_row_vector(&self.b_hidden)?;

        let b = x.rows();
        let mut r = Tensor::zeros(&[b, hd]);
        let mut u = Tensor::zeros(&[b, hd]);
        let mut n = Tensor::zeros(&[b, hd]);
        let mut hn = Tensor::zeros(&[b, hd]);
        let mut out = Tensor::zeros(&[b, hd]);
        for row in 0..b {
            let (gi, gh, hp) = (gi.row(row), gh.row(row), h.row(row));
            for j in 0..hd {
                let rj = sigmoid(gi[j] + gh[j]);
                let uj = sigmoid(gi[hd + j] + gh[hd + j]);
                let hnj = gh[2 * hd + j];
                let nj = (gi[2 * hd + j] + rj * hnj).tanh();
                r.row_mut(row)[j] = rj;
                u.row_mut(row)[j] = uj;
                n.row_mut(row)[j] = nj;
                hn.row_mut(row)[j] = hnj;
                out.row_mut(row)[j] = (1.0 - uj) * nj + uj * hp[j];
            }
        }
        let cache = GruCache {
            x: x.clone(),
            h: h.clone(),
            r,
            u,
            n,
            hn,
        };
        Ok((out, cache))
    }

    /// Given `dL/dh'`, accumulates parameter gradients and returns `(dL/dx, dL/dh)`.
    pub fn backward(
        &self,
        cache: &GruCache,
        dh_next: &Tensor,
        grad: &mut GruCell,
    ) -> Result<(Tensor, Tensor)> {
        let hd = self.hidden_dim();
        let b = cache.x.rows();
        if dh_next.shape() != [b, hd] {
            return Err(Error::shape("GruCell::backward", &[b, hd], dh_next.shape()));
        }
        let mut d_gi = Tensor::zeros(&[b, 3 * hd]);
        let mut d_gh = Tensor::zeros(&[b, 3 * hd]);
        let mut dh = Tensor::zeros(&[b, hd]);
        for row in 0..b {
            let (r, u, n, hn) = (
                cache.r.row(row),
                cache.u.row(row),
                cache.n.row(row),
                cache.hn.row(row),
            );
            let hp = cache.h.row(row);
            let dy = dh_next.row(row);
            for j in 0..hd {
                let dn = dy[j] * (1.0 - u[j]);
                let du = dy[j] * (hp[j] - n[j]);
                let dn_pre = dn * (1.0 - n[j] * n[j]);
                let du_pre = du * u[j] * (1.0 - u[j]);
                let dr_pre = dn_pre * hn[j] * r[j] * (1.0 - r[j]);
                let gi = d_gi.row_mut(row);
                gi[j] = dr_pre;
                gi[hd + j] = du_pre;
                gi[2 * hd + j] = dn_pre;
                let gh = d_gh.row_mut(row);
                gh[j] = dr_pre;
                gh[hd + j] = du_pre;
                gh[2 * hd + j] = dn_pre * r[j];
                dh.row_mut(row)[j] = dy[j] * u[j];
            }
        }
        grad.w_input.add_assign(&cache.x.t_matmul(&d_gi)?)?;
        grad.b_input.add_assign(&d_gi.sum_rows())?;
        grad.w_hidden.add_assign(&cache.h.t_matmul(&d_gh)?)?;
        grad.b_hidden.add_assign(&d_gh.sum_rows())?;
        let dx = d_gi.matmul_t(&self.w_input)?;
        dh.add_assign(&d_gh.matmul_t(&self.w_hidden)?)?;
        Ok((dx, dh))
    }
}

impl Parameterized for GruCell {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_input, &self.w_hidden, &self.b_input, &self.b_hidden]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_input,
            &mut self.w_hidden,
            &mut self.b_input,
            &mut self.b_hidden,
        ]
    }

    fn zeros_like(&self) -> Self {
        Self {
            w_input: Tensor::zeros(self.w_input.shape()),
            w_hidden: Tensor::zeros(self.w_hidden.shape()),
            b_input: Tensor::zeros(self.b_input.shape()),
            b_hidden: Tensor::zeros(self.b_hidden.shape()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_rel_error, max_rel_error_slices, numerical_grad_vec};
    use crate::nn::gradcheck::numerical_grad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    /// Loss `Σ_t c_t · h_t` over an unrolled sequence starting from `h0`.
    fn unrolled_loss(cell: &GruCell, xs: &[Tensor], h0: &Tensor, coef: &[Tensor]) -> f64 {
        let mut h = h0.clone();
        let mut loss = 0.0;
        for (x, c) in xs.iter().zip(coef) {
            h = cell.step(x, &h).unwrap();
            loss += h.hadamard(c).unwrap().sum();
        }
        loss
    }

    #[test]
    fn bptt_matches_finite_differences() {
        for len in [1usize, 3, 8] {
            let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
            let spec = RecurrentSpec { input: 3, hidden: 5 };
            let mut cell = GruCell::new(spec, &mut rng).unwrap();
            let xs: Vec<Tensor> = (0..len).map(|_| random(2, 3, &mut rng)).collect();
            let coef: Vec<Tensor> = (0..len).map(|_| random(2, 5, &mut rng)).collect();
            let h0 = random(2, 5, &mut rng);

            let mut caches = Vec::new();
            let mut h = h0.clone();
            for x in &xs {
                let (h2, c) = cell.step_cached(x, &h).unwrap();
                caches.push(c);
                h = h2;
            }
            let mut grad = cell.zeros_like();
            let mut dh = Tensor::zeros(&[2, 5]);
            let mut dxs = vec![Tensor::zeros(&[2, 3]); len];
            for t in (0..len).rev() {
                dh.add_assign(&coef[t]).unwrap();
                let (dx, dprev) = cell.backward(&caches[t], &dh, &mut grad).unwrap();
                dxs[t] = dx;
                dh = dprev;
            }
            let numeric =
                numerical_grad(&mut cell, |c| unrolled_loss(c, &xs, &h0, &coef), 1e-5);
            assert!(max_rel_error(&grad, &numeric) < 1e-4, "len {len}");

            let dh0 = numerical_grad_vec(
                h0.data(),
                |v| {
                    let h0 = Tensor::matrix(2, 5, v.to_vec()).unwrap();
                    unrolled_loss(&cell, &xs, &h0, &coef)
                },
                1e-5,
            );
            assert!(max_rel_error_slices(dh.data(), &dh0) < 1e-4);
            let dx0 = numerical_grad_vec(
                xs[0].data(),
                |v| {
                    let mut xs2 = xs.clone();
                    xs2[0] = Tensor::matrix(2, 3, v.to_vec()).unwrap();
                    unrolled_loss(&cell, &xs2, &h0, &coef)
                },
                1e-5,
            );
            assert!(max_rel_error_slices(dxs[0].data(), &dx0) < 1e-4);
        }
    }

    #[test]
    fn zero_weights_depend_only_on_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut cell = GruCell::new(RecurrentSpec { input: 2, hidden: 3 }, &mut rng).unwrap();
        cell.w_input.fill(0.0);
        cell.w_hidden.fill(0.0);
        let h = Tensor::zeros(&[1, 3]);
        let a = cell.step(&random(1, 2, &mut rng), &h).unwrap();
        let b = cell.step(&random(1, 2, &mut rng), &h).unwrap();
        assert_eq!(a, b);
    }
}
