//! System configuration in engineering units and its SI resolution.

use serde::{Deserialize, Serialize};

use crate::ecld::profile::{ProfileCatalog, VariantProfile};
use crate::error::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-device overrides; missing fields fall back to the shared defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub cpu_freq_hz: Option<f64>,
    pub p_max_dbm: Option<f64>,
    pub e_max_j: Option<f64>,
    pub position_m: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosConfig {
    pub local_profile: VariantProfile,
    pub edge_profile: VariantProfile,
    /// Edge accuracy mean; the edge model is the reference, hence 1.
    pub a_mec: f64,
    /// Edge hallucination mean; defaults to the edge profile's offline value.
    pub h_mec: Option<f64>,
    pub a_min: f64,
    pub h_max: f64,
    pub penalty_weight: f64,
    /// Beta concentration for per-slot QoS draws; `None` returns the means.
    pub concentration: Option<f64>,
    /// Also draw the edge QoS per slot instead of using its means.
    pub sample_edge: bool,
}

impl Default for QosConfig {
    fn default() -> Self {
        let cat = ProfileCatalog::builtin();
        Self {
            local_profile: cat.get("quantization").expect("builtin row").clone(),
            edge_profile: cat.get("original").expect("builtin row").clone(),
            a_mec: 1.0,
            h_mec: None,
            a_min: 0.6,
            h_max: 0.78,
            penalty_weight: 20.0,
            concentration: Some(50.0),
            sample_edge: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub num_mlus: usize,
    pub slots: usize,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub rician_k: f64,
    pub ref_gain_db: f64,
    pub mec_height_m: f64,
    pub mec_freq_hz: f64,
    pub cycles_per_bit: f64,
    /// Edge cycles per bit; defaults to `cycles_per_bit`.
    pub mec_cycles_per_bit: Option<f64>,
    pub cpu_freq_hz: f64,
    pub p_max_dbm: f64,
    pub e_max_j: f64,
    pub energy_coeff: f64,
    pub placement_radius_m: f64,
    pub task_bits_min: f64,
    pub task_bits_max: f64,
    pub slot_cap_s: f64,
    /// Use the mean channel gain instead of Rician draws.
    pub deterministic_channel: bool,
    pub devices: Vec<DeviceConfig>,
    pub qos: QosConfig,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_mlus: 2,
            slots: 100,
            bandwidth_hz: 10e6,
            noise_dbm: -104.0,
            rician_k: 8.0,
            ref_gain_db: -30.0,
            mec_height_m: 10.0,
            mec_freq_hz: 1e10,
            cycles_per_bit: 900.0,
            mec_cycles_per_bit: None,
            cpu_freq_hz: 2e9,
            p_max_dbm: 33.0,
            e_max_j: 2.0,
            energy_coeff: 1e-28,
            placement_radius_m: 20.0,
            task_bits_min: 1.0e6,
            task_bits_max: 2.5e6,
            slot_cap_s: 10.0,
            deterministic_channel: false,
            devices: Vec::new(),
            qos: QosConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub cpu_freq_hz: f64,
    pub p_max_w: f64,
    pub e_max_j: f64,
    pub position_m: Option<[f64; 2]>,
}

/// Validated parameters in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub num_mlus: usize,
    pub slots: usize,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub rician_k: f64,
    pub ref_gain: f64,
    pub mec_height_m: f64,
    pub mec_freq_hz: f64,
    pub cycles_per_bit: f64,
    pub mec_cycles_per_bit: f64,
    pub energy_coeff: f64,
    pub placement_radius_m: f64,
    pub task_bits_min: f64,
    pub task_bits_max: f64,
    pub slot_cap_s: f64,
    pub deterministic_channel: bool,
    pub devices: Vec<Device>,
    pub a_local: f64,
    pub h_local: f64,
    pub a_mec: f64,
    pub h_mec: f64,
    pub a_min: f64,
    pub h_max: f64,
    pub penalty_weight: f64,
    pub concentration: Option<f64>,
    pub sample_edge: bool,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} = {v} must be positive and finite")))
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} = {v} outside [0, 1]")))
    }
}

impl SystemConfig {
    pub fn resolve(&self) -> Result<SystemParams> {
        if self.num_mlus == 0 || self.slots == 0 {
            return Err(Error::InvalidConfig("num_mlus and slots must be at least 1".into()));
        }
        if !self.devices.is_empty() && self.devices.len() != self.num_mlus {
            return Err(Error::InvalidConfig(format!(
                "{} device overrides for {} MLUs",
                self.devices.len(),
                self.num_mlus
            )));
        }
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("rician_k", self.rician_k)?;
        positive("mec_freq_hz", self.mec_freq_hz)?;
        positive("cycles_per_bit", self.cycles_per_bit)?;
        positive("energy_coeff", self.energy_coeff)?;
        positive("placement_radius_m", self.placement_radius_m)?;
        positive("task_bits_min", self.task_bits_min)?;
        positive("slot_cap_s", self.slot_cap_s)?;
        if !(self.mec_height_m >= 0.0 && self.mec_height_m.is_finite()) {
            return Err(Error::InvalidConfig("mec_height_m must be nonnegative".into()));
        }
        if self.task_bits_max < self.task_bits_min || !self.task_bits_max.is_finite() {
            return Err(Error::InvalidConfig("task_bits_max must be ≥ task_bits_min".into()));
        }
        let phi_mec = self.mec_cycles_per_bit.unwrap_or(self.cycles_per_bit);
        positive("mec_cycles_per_bit", phi_mec)?;

        let devices = (0..self.num_mlus)
            .map(|k| {
                let o = self.devices.get(k).cloned().unwrap_or_default();
                let d = Device {
                    cpu_freq_hz: o.cpu_freq_hz.unwrap_or(self.cpu_freq_hz),
                    p_max_w: dbm_to_watts(o.p_max_dbm.unwrap_or(self.p_max_dbm)),
                    e_max_j: o.e_max_j.unwrap_or(self.e_max_j),
                    position_m: o.position_m,
                };
                positive("cpu_freq_hz", d.cpu_freq_hz)?;
                positive("p_max", d.p_max_w)?;
                positive("e_max_j", d.e_max_j)?;
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;

        let q = &self.qos;
        q.local_profile.validate()?;
        q.edge_profile.validate()?;
        let h_mec = q.h_mec.unwrap_or(q.edge_profile.offline_hallucination);
        unit("a_mec", q.a_mec)?;
        unit("h_mec", h_mec)?;
        unit("a_min", q.a_min)?;
        unit("h_max", q.h_max)?;
        if !(q.penalty_weight >= 0.0 && q.penalty_weight.is_finite()) {
            return Err(Error::InvalidConfig("penalty_weight must be nonnegative".into()));
        }
        if let Some(c) = q.concentration {
            positive("concentration", c)?;
        }

        let noise_w = dbm_to_watts(self.noise_dbm);
        let ref_gain = db_to_linear(self.ref_gain_db);
        positive("noise power", noise_w)?;
        positive("reference gain", ref_gain)?;

        Ok(SystemParams {
            num_mlus: self.num_mlus,
            slots: self.slots,
            bandwidth_hz: self.bandwidth_hz,
            noise_w,
            rician_k: self.rician_k,
            ref_gain,
            mec_height_m: self.mec_height_m,
            mec_freq_hz: self.mec_freq_hz,
            cycles_per_bit: self.cycles_per_bit,
            mec_cycles_per_bit: phi_mec,
            energy_coeff: self.energy_coeff,
            placement_radius_m: self.placement_radius_m,
            task_bits_min: self.task_bits_min,
            task_bits_max: self.task_bits_max,
            slot_cap_s: self.slot_cap_s,
            deterministic_channel: self.deterministic_channel,
            devices,
            a_local: q.local_profile.offline_accuracy,
            h_local: q.local_profile.offline_hallucination,
            a_mec: q.a_mec,
            h_mec,
            a_min: q.a_min,
            h_max: q.h_max,
            penalty_weight: q.penalty_weight,
            concentration: q.concentration,
            sample_edge: q.sample_edge,
        })
    }
}
