//! End-to-end compression run on the toy classifier.
//!
//! A hidden "truth" network labels standard-normal inputs. A teacher is fit to
//! those labels, scored, pruned, fine-tuned against its own unpruned logits,
//! and finally quantized tensor by tensor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distill::{distill_loss, distill_loss_grad, one_hot, DistillConfig};
use super::importance::compute_importance;
use super::mask::{apply_net_mask, build_masks};
use super::metrics::{offline_accuracy, offline_hallucination, split_qa, ArticleLabels, QaRecord};
use super::network::{ToyNet, ToyNetSpec};
use super::quant::{fit_quant_range, quantize};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, Parameterized};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcldConfig {
    pub seed: u64,
    pub network: ToyNetSpec,
    pub train_samples: usize,
    pub test_samples: usize,
    pub calibration_samples: usize,
    pub teacher_steps: usize,
    pub teacher_lr: f64,
    /// Width threshold as a fraction of the largest importance score.
    pub theta_width: f64,
    /// Depth threshold as a fraction of the largest importance score.
    pub theta_depth: f64,
    pub distill: DistillConfig,
    pub distill_steps: usize,
    pub distill_lr: f64,
    pub bits: u32,
    pub quant_grid: usize,
    pub target_profile: String,
}

impl Default for EcldConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            network: ToyNetSpec::default(),
            train_samples: 1024,
            test_samples: 1024,
            calibration_samples: 64,
            teacher_steps: 600,
            teacher_lr: 1e-2,
            theta_width: 0.15,
            theta_depth: 0.0,
            distill: DistillConfig::default(),
            distill_steps: 300,
            distill_lr: 5e-3,
            bits: 4,
            quant_grid: 32,
            target_profile: "ecld".into(),
        }
    }
}

impl EcldConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.distill.validate()?;
        if self.train_samples == 0 || self.test_samples == 0 || self.calibration_samples == 0 {
            return Err(Error::InvalidConfig("sample counts must be positive".into()));
        }
        for (name, t) in [("theta_width", self.theta_width), ("theta_depth", self.theta_depth)] {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and nonnegative")));
            }
        }
        if self.bits == 0 || self.bits > 32 {
            return Err(Error::InvalidConfig(format!("bit width {} outside 1..=32", self.bits)));
        }
        if self.quant_grid < 2 {
            return Err(Error::InvalidConfig("quant_grid must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSummary {
    pub total_params: usize,
    pub width_kept: usize,
    pub depth_kept: usize,
    pub combined_kept: usize,
    pub layers_kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageAccuracy {
    pub teacher: f64,
    pub pruned: f64,
    pub distilled: f64,
    pub quantized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageEstimate {
    pub baseline_bits: u64,
    pub compressed_bits: u64,
    pub ratio: f64,
    pub baseline_mb: f64,
    pub compressed_mb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub teacher_final_ce: f64,
    pub distill_initial: f64,
    pub distill_final: f64,
    pub distill_final_kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentReport {
    pub target_profile: String,
    pub bit_width: u32,
    pub size_estimate_mb: f64,
    pub artifact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub accuracy: f64,
    pub hallucination: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub masks: MaskSummary,
    pub accuracy: StageAccuracy,
    pub storage: StorageEstimate,
    /// Multiply-accumulates times bit width, relative to the dense 64-bit net.
    pub energy_estimate: f64,
    pub quantization_error: f64,
    pub losses: LossSummary,
    pub corpus: Option<CorpusScores>,
    pub deployment: DeploymentReport,
}

pub struct Corpora<'a> {
    pub qa: &'a [QaRecord],
    pub hallucination: &'a [ArticleLabels],
}

struct Task {
    x: Tensor,
    labels: Vec<usize>,
}

fn make_task(truth: &ToyNet, n: usize, rng: &mut ChaCha8Rng) -> Result<Task> {
    let x = ToyNet::sample_inputs(&truth.spec, n, rng);
    let labels = truth.predict(&x)?;
    Ok(Task { x, labels })
}

fn train_teacher(net: &mut ToyNet, task: &Task, cfg: &EcldConfig) -> Result<f64> {
    let y = one_hot(&task.labels, cfg.network.classes)?;
    let ce = DistillConfig { alpha: 0.0, tau: 1.0 };
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.teacher_lr), &*net);
    let mut last = f64::NAN;
    for _ in 0..cfg.teacher_steps {
        let (logits, cache) = net.forward_cached(&task.x)?;
        last = distill_loss(&logits, &logits, &y, &ce)?.total;
        let d = distill_loss_grad(&logits, &logits, &y, &ce)?;
        let mut grad = net.zeros_like();
        net.backward(&cache, &d, &mut grad)?;
        opt.step(net, &grad);
    }
    Ok(last)
}

fn distill_student(
    student: &mut ToyNet,
    mask: &ToyNet,
    teacher_logits: &Tensor,
    task: &Task,
    cfg: &EcldConfig,
) -> Result<(f64, f64, f64)> {
    let y = one_hot(&task.labels, cfg.network.classes)?;
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.distill_lr), &*student);
    let initial = distill_loss(&student.forward(&task.x)?, teacher_logits, &y, &cfg.distill)?.total;
    for _ in 0..cfg.distill_steps {
        let (logits, cache) = student.forward_cached(&task.x)?;
        let d = distill_loss_grad(&logits, teacher_logits, &y, &cfg.distill)?;
        let mut grad = student.zeros_like();
        student.backward(&cache, &d, &mut grad)?;
        grad = apply_net_mask(&grad, mask)?;
        opt.step(student, &grad);
        *student = apply_net_mask(student, mask)?;
    }
    let last = distill_loss(&student.forward(&task.x)?, teacher_logits, &y, &cfg.distill)?;
    Ok((initial, last.total, last.kl))
}

fn bits_to_mb(bits: u64) -> f64 {
    bits as f64 / 8.0 / 1e6
}

/// Runs prune → distill → quantize and summarizes each stage.
pub fn run_ecld(cfg: &EcldConfig, corpora: Option<Corpora<'_>>) -> Result<CompressionReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = ToyNet::new(cfg.network, &mut rng)?;
    let train = make_task(&truth, cfg.train_samples, &mut rng)?;
    let test = make_task(&truth, cfg.test_samples, &mut rng)?;
    let calibration = ToyNet::sample_inputs(&cfg.network, cfg.calibration_samples, &mut rng);

    let mut teacher = ToyNet::new(cfg.network, &mut rng)?;
    let teacher_final_ce = train_teacher(&mut teacher, &train, cfg)?;

    let scores = compute_importance(&teacher, &calibration)?;
    let top = scores.max();
    let masks = build_masks(&scores, cfg.theta_width * top, cfg.theta_depth * top);
    let pruned = apply_net_mask(&teacher, &masks.combined)?;

    let teacher_logits = teacher.forward(&train.x)?;
    let mut student = pruned.clone();
    let (distill_initial, distill_final, distill_final_kl) =
        distill_student(&mut student, &masks.combined, &teacher_logits, &train, cfg)?;

    let mut quantized = student.clone();
    let mut quantization_error = 0.0;
    let mut tensors_kept = 0u64;
    for (w, m) in quantized.params_mut().into_iter().zip(masks.combined.params()) {
        let kept: Vec<f64> = w
            .data()
            .iter()
            .zip(m.data())
            .filter(|(_, &k)| k != 0.0)
            .map(|(&x, _)| x)
            .collect();
        if kept.is_empty() {
            continue;
        }
        tensors_kept += 1;
        let fit = fit_quant_range(&kept, cfg.bits, cfg.quant_grid)?;
        quantization_error += fit.error;
        *w = quantize(w, &fit.spec)?.hadamard(m)?;
    }

    let total = masks.total();
    let kept = masks.combined_popcount();
    let baseline_bits = total as u64 * 64;
    // Each surviving tensor also stores its clipping range at full precision.
    let compressed_bits = kept as u64 * cfg.bits as u64 + tensors_kept * 2 * 64;
    let dense_macs = teacher.active_macs().max(1);
    let energy_estimate =
        (quantized.active_macs() as f64 * cfg.bits as f64) / (dense_macs as f64 * 64.0);

    let corpus = match corpora {
        Some(c) => {
            let (preds, refs) = split_qa(c.qa);
            Some(CorpusScores {
                accuracy: offline_accuracy(&preds, &refs)?,
                hallucination: offline_hallucination(c.hallucination)?,
            })
        }
        None => None,
    };

    Ok(CompressionReport {
        masks: MaskSummary {
            total_params: total,
            width_kept: masks.width_popcount(),
            depth_kept: masks.depth_popcount(),
            combined_kept: kept,
            layers_kept: masks.depth.iter().filter(|&&d| d != 0.0).count(),
        },
        accuracy: StageAccuracy {
            teacher: teacher.accuracy(&test.x, &test.labels)?,
            pruned: pruned.accuracy(&test.x, &test.labels)?,
            distilled: student.accuracy(&test.x, &test.labels)?,
            quantized: quantized.accuracy(&test.x, &test.labels)?,
        },
        storage: StorageEstimate {
            baseline_bits,
            compressed_bits,
            ratio: compressed_bits as f64 / baseline_bits as f64,
            baseline_mb: bits_to_mb(baseline_bits),
            compressed_mb: bits_to_mb(compressed_bits),
        },
        energy_estimate,
        quantization_error,
        losses: LossSummary {
            teacher_final_ce,
            distill_initial,
            distill_final,
            distill_final_kl,
        },
        corpus,
        deployment: DeploymentReport {
            target_profile: cfg.target_profile.clone(),
            bit_width: cfg.bits,
            size_estimate_mb: bits_to_mb(compressed_bits),
            artifact: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> EcldConfig {
        EcldConfig {
            train_samples: 256,
            test_samples: 256,
            teacher_steps: 150,
            distill_steps: 60,
            ..EcldConfig::default()
        }
    }

    #[test]
    fn zero_threshold_prunes_nothing() {
        let cfg = EcldConfig {
            theta_width: 0.0,
            theta_depth: 0.0,
            ..quick()
        };
        let r = run_ecld(&cfg, None).unwrap();
        assert_eq!(r.masks.combined_kept, r.masks.total_params);
        assert_eq!(r.accuracy.pruned, r.accuracy.teacher);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = run_ecld(&quick(), None).unwrap();
        let b = run_ecld(&quick(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = EcldConfig { bits: 0, ..quick() };
        assert!(run_ecld(&cfg, None).is_err());
    }
}
