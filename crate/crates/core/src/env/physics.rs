//! Closed-form cost, channel and penalty models for one slot.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight-line distance to an antenna mounted `height` above the origin plane.
pub fn distance(mlu: [f64; 2], mec: [f64; 2], height: f64) -> f64 {
    let dx = mlu[0] - mec[0];
    let dy = mlu[1] - mec[1];
    (dx * dx + dy * dy + height * height).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fading {
    Rician,
    /// Line-of-sight limit: the small-scale factor is fixed at its mean of 1.
    Deterministic,
}

/// Small-scale power factor `|√(κ/(κ+1)) + √(1/(κ+1))·h̄|²` with `h̄ ~ CN(0, 1)`.
pub fn rician_factor<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let los = (kappa / (kappa + 1.0)).sqrt();
    let scatter = (1.0 / (kappa + 1.0)).sqrt();
    let re: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
    let im: f64 = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
    let a = los + scatter * re;
    let b = scatter * im;
    a * a + b * b
}

/// Channel power gain `g0/d² · h̃`.
pub fn channel_gain<R: Rng + ?Sized>(
    d: f64,
    g0: f64,
    kappa: f64,
    fading: Fading,
    rng: &mut R,
) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("distance {d} must be positive")));
    }
    let path = g0 / (d * d);
    Ok(match fading {
        Fading::Deterministic => path,
        Fading::Rician => path * rician_factor(kappa, rng),
    })
}

/// Uplink rate of user `k` treating every other user's signal as interference.
pub fn uplink_rate(k: usize, powers: &[f64], gains: &[f64], bandwidth: f64, noise: f64) -> f64 {
    let interference: f64 = powers
        .iter()
        .zip(gains)
        .enumerate()
        .filter(|&(l, _)| l != k)
        .map(|(_, (p, h))| p * h)
        .sum();
    bandwidth * (1.0 + powers[k] * gains[k] / (interference + noise)).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalCost {
    pub latency_s: f64,
    pub energy_j: f64,
}

pub fn local_cost(alpha: f64, task_bits: f64, cpu_freq: f64, phi: f64, kappa_comp: f64) -> LocalCost {
    let cycles = (1.0 - alpha) * phi * task_bits;
    LocalCost {
        latency_s: cycles / cpu_freq,
        energy_j: kappa_comp * cpu_freq * cpu_freq * cycles,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffloadCost {
    pub upload_s: f64,
    pub mec_s: f64,
    pub energy_j: f64,
    /// The upload could not complete at the given rate and was capped.
    pub capped: bool,
}

/// Upload, edge compute and transmit energy for the offloaded share.
///
/// Upload time is capped at `slot_cap` (also when the rate is zero).
pub fn offload_cost(
    alpha: f64,
    task_bits: f64,
    rate: f64,
    power: f64,
    phi_mec: f64,
    mec_freq: f64,
    slot_cap: f64,
) -> OffloadCost {
    if alpha <= 0.0 {
        return OffloadCost {
            upload_s: 0.0,
            mec_s: 0.0,
            energy_j: 0.0,
            capped: false,
        };
    }
    let raw = if rate > 0.0 {
        alpha * task_bits / rate
    } else {
        f64::INFINITY
    };
    let capped = raw > slot_cap;
    let upload_s = raw.min(slot_cap);
    OffloadCost {
        upload_s,
        mec_s: alpha * phi_mec * task_bits / mec_freq,
        energy_j: power * upload_s,
        capped,
    }
}

/// Offload-weighted accuracy and hallucination.
pub fn qos_blend(alpha: f64, a_local: f64, h_local: f64, a_mec: f64, h_mec: f64) -> (f64, f64) {
    (
        alpha * a_mec + (1.0 - alpha) * a_local,
        alpha * h_mec + (1.0 - alpha) * h_local,
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub accuracy: f64,
    pub hallucination: f64,
    pub energy: f64,
}

impl Penalty {
    pub fn total(&self) -> f64 {
        self.accuracy + self.hallucination + self.energy
    }
}

/// Aggregate hinge violations of the accuracy, hallucination and energy budgets.
pub fn penalty(
    accuracy: &[f64],
    hallucination: &[f64],
    energy: &[f64],
    energy_budget: &[f64],
    a_min: f64,
    h_max: f64,
) -> Penalty {
    let k = accuracy.len() as f64;
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    Penalty {
        accuracy: (k * a_min - sum(accuracy)).max(0.0),
        hallucination: (sum(hallucination) - k * h_max).max(0.0),
        energy: (sum(energy) - sum(energy_budget)).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::config::dbm_to_watts;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_examples() {
        assert_eq!(distance([1.0, 2.0], [1.0, 2.0], 0.0), 0.0);
        assert_eq!(distance([3.0, 4.0], [0.0, 0.0], 0.0), 5.0);
        assert!((distance([20.0, 0.0], [0.0, 0.0], 10.0) - 22.360_679_774_997_898).abs() < 1e-12);
    }

    #[test]
    fn deterministic_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = 500f64.sqrt();
        let h = channel_gain(d, 1e-3, 8.0, Fading::Deterministic, &mut rng).unwrap();
        assert!((h - 2e-6).abs() < 1e-18);
        assert!(channel_gain(0.0, 1e-3, 8.0, Fading::Rician, &mut rng).is_err());
    }

    #[test]
    fn rician_factor_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| rician_factor(8.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn rate_examples() {
        assert_eq!(uplink_rate(0, &[0.0], &[1e-6], 1e7, 1e-13), 0.0);
        let r = uplink_rate(0, &[2.0], &[2e-6], 1e7, dbm_to_watts(-104.0));
        assert!((r / 2.66e8 - 1.0).abs() < 5e-3, "{r}");
        let r0 = uplink_rate(0, &[1.0, 1.0], &[3e-6, 3e-6], 1e7, 1e-13);
        let r1 = uplink_rate(1, &[1.0, 1.0], &[3e-6, 3e-6], 1e7, 1e-13);
        assert_eq!(r0, r1);
    }

    #[test]
    fn cost_examples() {
        let c = local_cost(1.0, 1e6, 2e9, 900.0, 1e-28);
        assert_eq!((c.latency_s, c.energy_j), (0.0, 0.0));
        let c = local_cost(0.0, 1e6, 2e9, 900.0, 1e-28);
        assert!((c.latency_s - 0.45).abs() < 1e-15);
        assert!((c.energy_j - 0.36).abs() < 1e-15);

        let o = offload_cost(0.0, 1e6, 2.66e8, 2.0, 900.0, 1e10, 10.0);
        assert_eq!((o.upload_s, o.mec_s, o.energy_j), (0.0, 0.0, 0.0));
        let o = offload_cost(1.0, 1e6, 2.66e8, 2.0, 900.0, 1e10, 10.0);
        assert!((o.upload_s - 3.759_398_496e-3).abs() < 1e-12);
        assert!((o.mec_s - 0.09).abs() < 1e-15);
        let o = offload_cost(0.5, 1e6, 0.0, 2.0, 900.0, 1e10, 10.0);
        assert!(o.capped);
        assert_eq!(o.upload_s, 10.0);
        assert_eq!(o.energy_j, 20.0);
    }

    #[test]
    fn blend_and_penalty_examples() {
        assert_eq!(qos_blend(1.0, 0.6, 0.8, 1.0, 0.7), (1.0, 0.7));
        assert_eq!(qos_blend(0.0, 0.6, 0.8, 1.0, 0.7), (0.6, 0.8));
        assert!((qos_blend(0.5, 0.6, 0.8, 1.0, 0.7).0 - 0.8).abs() < 1e-15);

        let ok = penalty(&[0.7, 0.7], &[0.7, 0.7], &[1.0, 1.0], &[2.0, 2.0], 0.6, 0.78);
        assert_eq!(ok.total(), 0.0);
        let p = penalty(&[0.5, 0.5], &[0.7, 0.7], &[2.0, 2.0], &[2.0, 2.0], 0.6, 0.78);
        assert!((p.accuracy - 0.2).abs() < 1e-15);
        assert_eq!(p.energy, 0.0);
    }

    proptest! {
        #[test]
        fn rate_monotone_in_powers(
            p in proptest::collection::vec(0.01f64..2.0, 3),
            h in proptest::collection::vec(1e-7f64..1e-5, 3),
            bump in 1e-3f64..0.5,
        ) {
            let base = uplink_rate(0, &p, &h, 1e7, 4e-14);
            let mut up = p.clone();
            up[0] += bump;
            prop_assert!(uplink_rate(0, &up, &h, 1e7, 4e-14) > base);
            let mut intf = p.clone();
            intf[1] += bump;
            prop_assert!(uplink_rate(0, &intf, &h, 1e7, 4e-14) < base);
        }

        #[test]
        fn blend_monotone_when_edge_more_accurate(
            a in 0.0f64..1.0, b in 0.0f64..1.0,
            al in 0.0f64..0.5, am in 0.5f64..1.0,
        ) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let x = qos_blend(lo, al, 0.5, am, 0.5).0;
            let y = qos_blend(hi, al, 0.5, am, 0.5).0;
            prop_assert!(x <= y + 1e-15);
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
