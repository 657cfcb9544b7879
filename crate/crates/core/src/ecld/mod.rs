//! Compression toolkit: importance scoring, pruning masks, distillation,
//! quantization, offline quality metrics and variant profiles.

pub mod distill;
pub mod importance;
pub mod mask;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod profile;
pub mod quant;

pub use distill::{distill_loss, distill_loss_grad, softmax, DistillConfig, DistillLoss};
pub use importance::{compute_importance, ImportanceScores};
pub use mask::{apply_mask, build_masks, threshold_mask, PruningMask};
pub use metrics::{offline_accuracy, offline_hallucination};
pub use network::{ToyNet, ToyNetSpec};
pub use pipeline::{run_ecld, CompressionReport, EcldConfig};
pub use profile::{ProfileCatalog, VariantProfile};
pub use quant::{fit_quant_range, quantize, QuantFit, QuantSpec};
