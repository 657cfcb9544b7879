//! Leave-one-out sensitivity scores for structural components.

use serde::{Deserialize, Serialize};

use super::network::{Gates, ToyNet, ToyNetSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub spec: ToyNetSpec,
    pub layer: Vec<f64>,
    /// `[layer][neuron]`
    pub neuron: Vec<Vec<f64>>,
    /// `[layer][head]`
    pub head: Vec<Vec<f64>>,
    pub embed: Vec<f64>,
}

impl ImportanceScores {
    pub fn max(&self) -> f64 {
        self.layer
            .iter()
            .chain(self.neuron.iter().flatten())
            .chain(self.head.iter().flatten())
            .chain(&self.embed)
            .fold(0.0, |m, &x| m.max(x))
    }
}

/// Mean absolute change of the logits when one component is switched off.
///
/// The change is averaged over every calibration row and every output class.
pub fn compute_importance(net: &ToyNet, calibration: &Tensor) -> Result<ImportanceScores> {
    let spec = net.spec;
    if calibration.rows() == 0 || calibration.is_empty() {
        return Err(Error::EmptyInput("calibration batch".into()));
    }
    if calibration.cols() != spec.embed {
        return Err(Error::shape(
            "compute_importance",
            &[spec.embed],
            &[calibration.cols()],
        ));
    }
    let base = net.forward(calibration)?;
    let sensitivity = |gates: &Gates| -> Result<f64> {
        let out = net.forward_gated(calibration, gates)?;
        let total: f64 = out
            .data()
            .iter()
            .zip(base.data())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(total / out.len() as f64)
    };

    let ones = Gates::ones(&spec);
    let mut layer = Vec::with_capacity(spec.layers);
    let mut neuron = Vec::with_capacity(spec.layers);
    let mut head = Vec::with_capacity(spec.layers);
    for l in 0..spec.layers {
        let mut g = ones.clone();
        g.layer[l] = 0.0;
        layer.push(sensitivity(&g)?);

        let mut row = Vec::with_capacity(spec.hidden);
        for j in 0..spec.hidden {
            let mut g = ones.clone();
            g.neuron[l][j] = 0.0;
            row.push(sensitivity(&g)?);
        }
        neuron.push(row);

        let mut row = Vec::with_capacity(spec.heads);
        for h in 0..spec.heads {
            let mut g = ones.clone();
            let size = spec.head_size();
            for j in h * size..(h + 1) * size {
                g.neuron[l][j] = 0.0;
            }
            row.push(sensitivity(&g)?);
        }
        head.push(row);
    }
    let mut embed = Vec::with_capacity(spec.embed);
    for e in 0..spec.embed {
        let mut g = ones.clone();
        g.embed[e] = 0.0;
        embed.push(sensitivity(&g)?);
    }
    Ok(ImportanceScores {
        spec,
        layer,
        neuron,
        head,
        embed,
    })
}
