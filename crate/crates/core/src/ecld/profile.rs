//! Quality and cost profiles of compressed model variants.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantProfile {
    pub name: String,
    pub offline_accuracy: f64,
    pub offline_hallucination: f64,
    pub storage_mb: f64,
    pub energy_wh: f64,
}

impl VariantProfile {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("offline_accuracy", self.offline_accuracy),
            ("offline_hallucination", self.offline_hallucination),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "profile {:?}: {field} = {v} outside [0, 1]",
                    self.name
                )));
            }
        }
        for (field, v) in [("storage_mb", self.storage_mb), ("energy_wh", self.energy_wh)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "profile {:?}: {field} = {v} must be positive",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Profiles keyed by variant name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileCatalog(pub BTreeMap<String, VariantProfile>);

impl ProfileCatalog {
    /// Measured Llama-3.1-8B variants.
    pub fn builtin() -> Self {
        let rows = [
            ("original", 0.7030, 0.77, 15316.53, 0.24),
            ("quantization", 0.2499, 0.82, 4308.13, 0.13),
            ("pruning", 0.3076, 0.70, 13236.46, 0.27),
            ("pruning_distillation", 0.6211, 0.85, 13236.46, 0.20),
            ("ecld", 0.5905, 0.65, 3336.18, 0.12),
        ];
        Self(
            rows.into_iter()
                .map(|(name, acc, hal, mb, wh)| {
                    (
                        name.to_string(),
                        VariantProfile {
                            name: name.to_string(),
                            offline_accuracy: acc,
                            offline_hallucination: hal,
                            storage_mb: mb,
                            energy_wh: wh,
                        },
                    )
                })
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cat: Self = serde_json::from_str(text)?;
        cat.validate()?;
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, p) in &self.0 {
            if key != &p.name {
                return Err(Error::InvalidConfig(format!(
                    "catalog key {key:?} does not match profile name {:?}",
                    p.name
                )));
            }
            p.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&VariantProfile> {
        self.0
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant profile {name:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows_are_valid() {
        let cat = ProfileCatalog::builtin();
        cat.validate().unwrap();
        assert_eq!(cat.0.len(), 5);
        assert_eq!(cat.get("ecld").unwrap().offline_hallucination, 0.65);
        assert_eq!(cat.get("original").unwrap().offline_accuracy, 0.7030);
    }

    #[test]
    fn json_round_trip() {
        let cat = ProfileCatalog::builtin();
        let text = serde_json::to_string(&cat).unwrap();
        assert_eq!(ProfileCatalog::from_json(&text).unwrap(), cat);
    }

    #[test]
    fn rejects_out_of_range_probability() {
        let mut cat = ProfileCatalog::builtin();
        cat.0.get_mut("pruning").unwrap().offline_accuracy = 1.2;
        assert!(cat.validate().is_err());
        assert!(ProfileCatalog::builtin().get("missing").is_err());
    }
}
