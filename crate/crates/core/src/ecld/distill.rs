//! Distillation objective: hard-label cross-entropy mixed with a softened KL term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub alpha: f64,
    pub tau: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { alpha: 0.5, tau: 2.0 }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig(format!("tau {} must be positive", self.tau)));
        }
        Ok(())
    }
}

/// Row-wise `softmax(z / tau)`.
pub fn softmax(logits: &Tensor, tau: f64) -> Tensor {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = ((*x - max) / tau).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

/// Row-wise `log softmax(z / tau)`.
fn log_softmax(logits: &Tensor, tau: f64) -> Tensor {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lse = row.iter().map(|&x| ((x - max) / tau).exp()).sum::<f64>().ln();
        for x in row.iter_mut() {
            *x = (*x - max) / tau - lse;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillLoss {
    pub total: f64,
    pub cross_entropy: f64,
    pub kl: f64,
}

fn check(student: &Tensor, teacher: &Tensor, labels: &Tensor) -> Result<()> {
    if student.shape() != teacher.shape() {
        return Err(Error::shape("distill_loss teacher", student.shape(), teacher.shape()));
    }
    if student.shape() != labels.shape() {
        return Err(Error::shape("distill_loss labels", student.shape(), labels.shape()));
    }
    if student.rows() == 0 {
        return Err(Error::EmptyInput("distillation batch".into()));
    }
    for r in 0..labels.rows() {
        let row = labels.row(r);
        let ones = row.iter().filter(|&&y| y == 1.0).count();
        if ones != 1 || row.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument(format!("label row {r} is not one-hot")));
        }
    }
    Ok(())
}

/// `(1−α)·CE(y, p_s) + α·KL(p_t(τ) ‖ p_s(τ))`, averaged over rows.
pub fn distill_loss(
    student: &Tensor,
    teacher: &Tensor,
    labels: &Tensor,
    cfg: &DistillConfig,
) -> Result<DistillLoss> {
    cfg.validate()?;
    check(student, teacher, labels)?;
    let n = student.rows() as f64;
    let log_ps = log_softmax(student, 1.0);
    let log_ps_tau = log_softmax(student, cfg.tau);
    let log_pt_tau = log_softmax(teacher, cfg.tau);

    let mut ce = 0.0;
    let mut kl = 0.0;
    for r in 0..student.rows() {
        for c in 0..student.cols() {
            ce -= labels.get(r, c) * log_ps.get(r, c);
            let lt = log_pt_tau.get(r, c);
            let pt = lt.exp();
            if pt > 0.0 {
                kl += pt * (lt - log_ps_tau.get(r, c));
            }
        }
    }
    let (ce, kl) = (ce / n, (kl / n).max(0.0));
    Ok(DistillLoss {
        total: (1.0 - cfg.alpha) * ce + cfg.alpha * kl,
        cross_entropy: ce,
        kl,
    })
}

/// Gradient of [`distill_loss`]'s total with respect to the student logits.
pub fn distill_loss_grad(
    student: &Tensor,
    teacher: &Tensor,
    labels: &Tensor,
    cfg: &DistillConfig,
) -> Result<Tensor> {
    cfg.validate()?;
    check(student, teacher, labels)?;
    let n = student.rows() as f64;
    let ps = softmax(student, 1.0);
    let ps_tau = softmax(student, cfg.tau);
    let pt_tau = softmax(teacher, cfg.tau);
    let mut g = Tensor::zeros(student.shape());
    for (i, x) in g.data_mut().iter_mut().enumerate() {
        let hard = ps.data()[i] - labels.data()[i];
        let soft = (ps_tau.data()[i] - pt_tau.data()[i]) / cfg.tau;
        *x = ((1.0 - cfg.alpha) * hard + cfg.alpha * soft) / n;
    }
    Ok(g)
}

/// One-hot rows for class indices.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (r, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(Error::InvalidArgument(format!("label {c} out of range for {classes} classes")));
        }
        t.set(r, c, 1.0);
    }
    Ok(t)
}
