//! Uniform affine quantization and clipping-range search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAX_BITS: u32 = 52;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec {
    pub bits: u32,
    pub a: f64,
    pub b: f64,
}

impl QuantSpec {
    pub fn new(bits: u32, a: f64, b: f64) -> Result<Self> {
        let spec = Self { bits, a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > MAX_BITS {
            return Err(Error::InvalidConfig(format!(
                "bit width {} outside 1..={MAX_BITS}",
                self.bits
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite()) || self.b <= self.a {
            return Err(Error::InvalidConfig(format!(
                "quantization range [{}, {}] is empty",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> f64 {
        ((1u64 << self.bits) - 1) as f64
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.levels()
    }

    /// Nearest lattice point to `w` after clamping into `[a, b]`.
    pub fn quantize_value(&self, w: f64) -> f64 {
        let step = self.step();
        let k = ((w.clamp(self.a, self.b) - self.a) / step).round();
        (k * step + self.a).clamp(self.a, self.b)
    }
}

pub fn quantize(w: &Tensor, spec: &QuantSpec) -> Result<Tensor> {
    spec.validate()?;
    Ok(w.map(|x| spec.quantize_value(x)))
}

/// `‖W − Q(W)‖²`.
pub fn reconstruction_error(w: &[f64], spec: &QuantSpec) -> f64 {
    w.iter()
        .map(|&x| {
            let d = x - spec.quantize_value(x);
            d * d
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantFit {
    pub spec: QuantSpec,
    pub error: f64,
    /// Error of the plain `(min, max)` range.
    pub minmax_error: f64,
    /// Set when the input is constant and no real search was possible.
    pub degenerate: bool,
}

/// Grid search for the clipping range minimizing squared reconstruction error.
///
/// The coarse grid moves `a` up from `min(W)` and `b` down from `max(W)`, each
/// over half the span in `grid` points, so it contains `(min, max)` and is
/// mirror-symmetric. One finer pass of the same size is then centered on the
/// best coarse pair.
pub fn fit_quant_range(w: &[f64], bits: u32, grid: usize) -> Result<QuantFit> {
    if w.is_empty() {
        return Err(Error::EmptyInput("weights to quantize".into()));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution {grid} < 2")));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        let eps = f64::EPSILON * lo.abs().max(1.0);
        let spec = QuantSpec::new(bits, lo, lo + eps)?;
        return Ok(QuantFit {
            spec,
            error: reconstruction_error(w, &spec),
            minmax_error: 0.0,
            degenerate: true,
        });
    }

    let base = QuantSpec::new(bits, lo, hi)?;
    let minmax_error = reconstruction_error(w, &base);
    let mut best = (base, minmax_error);
    let consider = |a: f64, b: f64, best: &mut (QuantSpec, f64)| {
        if let Ok(spec) = QuantSpec::new(bits, a, b) {
            let err = reconstruction_error(w, &spec);
            if err < best.1 {
                *best = (spec, err);
            }
        }
    };

    let stride = (hi - lo) / 2.0 / (grid - 1) as f64;
    for i in 0..grid {
        for j in 0..grid {
            consider(lo + i as f64 * stride, hi - j as f64 * stride, &mut best);
        }
    }
    let (ca, cb) = (best.0.a, best.0.b);
    let fine = 2.0 * stride / (grid - 1) as f64;
    for i in 0..grid {
        for j in 0..grid {
            let a = ca - stride + i as f64 * fine;
            let b = cb + stride - j as f64 * fine;
            consider(a, b, &mut best);
        }
    }
    Ok(QuantFit {
        spec: best.0,
        error: best.1,
        minmax_error,
        degenerate: false,
    })
}
