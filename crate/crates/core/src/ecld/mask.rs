//! Width, depth and combined pruning masks.

use serde::{Deserialize, Serialize};

use super::importance::ImportanceScores;
use super::network::ToyNet;
use crate::error::{Error, Result};
use crate::nn::Parameterized;
use crate::tensor::Tensor;

/// Binary masks shaped like the network parameters.
///
/// `width` keeps a weight when every component it touches (neuron, head,
/// embedding dimension) survives; `depth` keeps or drops whole blocks;
/// `combined` is their elementwise product with `depth` broadcast over
/// each block's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruningMask {
    pub width: ToyNet,
    pub depth: Vec<f64>,
    pub combined: ToyNet,
}

impl PruningMask {
    pub fn width_popcount(&self) -> usize {
        popcount(&self.width)
    }

    /// Parameters kept by the depth mask alone.
    pub fn depth_popcount(&self) -> usize {
        popcount(&depth_broadcast(&self.width, &self.depth))
    }

    pub fn combined_popcount(&self) -> usize {
        popcount(&self.combined)
    }

    pub fn total(&self) -> usize {
        self.combined.num_params()
    }
}

/// Ones-and-zeros mask: 1 where `score ≥ theta`.
pub fn threshold_mask(scores: &[f64], theta: f64) -> Vec<f64> {
    scores
        .iter()
        .map(|&s| if s >= theta { 1.0 } else { 0.0 })
        .collect()
}

/// Thresholds the scores into width and depth masks and combines them.
pub fn build_masks(scores: &ImportanceScores, theta_width: f64, theta_depth: f64) -> PruningMask {
    let spec = scores.spec;
    let embed = threshold_mask(&scores.embed, theta_width);
    let neuron_keep: Vec<Vec<f64>> = (0..spec.layers)
        .map(|l| {
            let n = threshold_mask(&scores.neuron[l], theta_width);
            let h = threshold_mask(&scores.head[l], theta_width);
            n.iter()
                .enumerate()
                .map(|(j, &k)| k * h[spec.head_of(j)])
                .collect()
        })
        .collect();
    let depth = threshold_mask(&scores.layer, theta_depth);

    // Any parameter layout works here; only shapes are read.
    let mut width = ToyNet {
        spec,
        blocks: (0..spec.layers)
            .map(|_| super::network::Block {
                up: crate::nn::Linear::zeros(spec.embed, spec.hidden),
                down: crate::nn::Linear::zeros(spec.hidden, spec.embed),
            })
            .collect(),
        readout: crate::nn::Linear::zeros(spec.embed, spec.classes),
    };
    for (l, block) in width.blocks.iter_mut().enumerate() {
        for e in 0..spec.embed {
            for j in 0..spec.hidden {
                let keep = embed[e] * neuron_keep[l][j];
                block.up.weight.set(e, j, keep);
                block.down.weight.set(j, e, keep);
            }
            block.down.bias.data_mut()[e] = embed[e];
        }
        block.up.bias.data_mut().copy_from_slice(&neuron_keep[l]);
    }
    for e in 0..spec.embed {
        for c in 0..spec.classes {
            width.readout.weight.set(e, c, embed[e]);
        }
    }
    width.readout.bias.fill(1.0);

    let depth_full = depth_broadcast(&width, &depth);
    let mut combined = width.clone();
    for (c, d) in combined.params_mut().into_iter().zip(depth_full.params()) {
        for (x, y) in c.data_mut().iter_mut().zip(d.data()) {
            *x *= y;
        }
    }
    PruningMask {
        width,
        depth,
        combined,
    }
}

/// Depth mask expanded to parameter shapes; the readout is never dropped.
fn depth_broadcast(shape_of: &ToyNet, depth: &[f64]) -> ToyNet {
    let mut out = shape_of.zeros_like();
    for (block, &d) in out.blocks.iter_mut().zip(depth) {
        for t in block.up.params_mut().into_iter().chain(block.down.params_mut()) {
            t.fill(d);
        }
    }
    out.readout.weight.fill(1.0);
    out.readout.bias.fill(1.0);
    out
}

fn popcount(mask: &ToyNet) -> usize {
    mask.params().iter().map(|t| t.count_nonzero()).sum()
}

/// Hadamard product `W ⊙ M`.
///
/// `M` may match `W` exactly, be a single element, or match the trailing
/// dimension of `W` (one mask value per column, repeated over rows).
pub fn apply_mask(w: &Tensor, m: &Tensor) -> Result<Tensor> {
    if w.shape() == m.shape() {
        return w.hadamard(m);
    }
    if m.len() == 1 {
        return Ok(w.scale(m.data()[0]));
    }
    if m.shape().len() == 1 && m.len() == w.cols() {
        let mut out = w.clone();
        for r in 0..out.rows() {
            for (x, k) in out.row_mut(r).iter_mut().zip(m.data()) {
                *x *= k;
            }
        }
        return Ok(out);
    }
    Err(Error::shape("apply_mask", w.shape(), m.shape()))
}

/// Applies a parameter-shaped mask to every tensor of a network.
pub fn apply_net_mask(net: &ToyNet, mask: &ToyNet) -> Result<ToyNet> {
    let mut out = net.clone();
    for (w, m) in out.params_mut().into_iter().zip(mask.params()) {
        *w = apply_mask(w, m)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecld::network::ToyNetSpec;
    use proptest::prelude::*;

    fn scores_from(seed_vals: &[f64], spec: ToyNetSpec) -> ImportanceScores {
        let mut it = seed_vals.iter().cycle().copied();
        ImportanceScores {
            spec,
            layer: (0..spec.layers).map(|_| it.next().unwrap()).collect(),
            neuron: (0..spec.layers)
                .map(|_| (0..spec.hidden).map(|_| it.next().unwrap()).collect())
                .collect(),
            head: (0..spec.layers)
                .map(|_| (0..spec.heads).map(|_| it.next().unwrap()).collect())
                .collect(),
            embed: (0..spec.embed).map(|_| it.next().unwrap()).collect(),
        }
    }

    #[test]
    fn threshold_example() {
        assert_eq!(threshold_mask(&[0.1, 0.5, 0.9], 0.5), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_threshold_keeps_everything() {
        let spec = ToyNetSpec::default();
        let s = scores_from(&[0.3, 0.01, 2.0], spec);
        let m = build_masks(&s, 0.0, 0.0);
        assert_eq!(m.combined_popcount(), m.total());
    }

    #[test]
    fn huge_threshold_drops_all_blocks_and_embeddings() {
        let spec = ToyNetSpec::default();
        let s = scores_from(&[0.3, 0.01, 2.0], spec);
        let m = build_masks(&s, 1e9, 1e9);
        // Only the readout bias is never tied to a prunable component.
        assert_eq!(m.combined_popcount(), spec.classes);
        assert!(m.depth.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn apply_mask_examples() {
        let w = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let m = Tensor::vector(vec![1.0, 0.0, 1.0]);
        assert_eq!(apply_mask(&w, &m).unwrap().data(), &[1.0, 0.0, 3.0]);
        assert_eq!(apply_mask(&w, &Tensor::vector(vec![1.0; 3])).unwrap(), w);
        assert_eq!(
            apply_mask(&w, &Tensor::vector(vec![0.0; 3])).unwrap().count_nonzero(),
            0
        );
        assert!(apply_mask(&w, &Tensor::vector(vec![1.0; 2])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn combined_is_width_times_depth(
            vals in proptest::collection::vec(0.0f64..1.0, 64),
            tw in 0.0f64..1.0,
            td in 0.0f64..1.0,
        ) {
            let spec = ToyNetSpec { embed: 3, hidden: 4, heads: 2, layers: 3, classes: 2 };
            let s = scores_from(&vals, spec);
            let m = build_masks(&s, tw, td);
            let depth_full = depth_broadcast(&m.width, &m.depth);
            for ((c, w), d) in m.combined.params().iter().zip(m.width.params()).zip(depth_full.params()) {
                for ((&c, &w), &d) in c.data().iter().zip(w.data()).zip(d.data()) {
                    prop_assert!(c == 0.0 || c == 1.0);
                    prop_assert_eq!(c, w * d);
                }
            }
            prop_assert!(m.combined_popcount() <= m.width_popcount().min(m.depth_popcount()));
        }

        #[test]
        fn masked_nonzeros_bounded_by_popcount(
            w in proptest::collection::vec(-2.0f64..2.0, 12),
            bits in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let w = Tensor::vector(w);
            let m = Tensor::vector(bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
            let out = apply_mask(&w, &m).unwrap();
            prop_assert!(out.count_nonzero() <= m.count_nonzero());
            for i in 0..12 {
                prop_assert_eq!(out.data()[i], w.data()[i] * m.data()[i]);
            }
        }
    }
}
