//! Named end-to-end run profiles bundling the physical setup, model widths,
//! and training budget.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::Result;
use crate::neural::{LossKind, ModelDims, TrainConfig};
use crate::pilots::FeatureMode;
use crate::ris::ReferenceKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub system: SystemConfig,
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
    pub feature_mode: FeatureMode,
    /// Total samples generated by `gen` (train + val + test pool).
    pub samples: usize,
    pub train: TrainConfig,
    /// Power at which labels are computed and the model is trained.
    pub label_power_dbm: f64,
    /// Uplink pilot power; independent of the downlink sweep.
    pub pilot_power_dbm: f64,
    pub reference: ReferenceKind,
}

impl Profile {
    /// Paper-scale setup: 8x8 RIS, 140-wide LSTM, 200/100 dense.
    pub fn full_scale() -> Profile {
        Profile {
            name: "full".into(),
            system: SystemConfig::full_scale(),
            hidden: 140,
            dense1: 200,
            dense2: 100,
            feature_mode: FeatureMode::KronEven,
            samples: 1_000_000,
            train: TrainConfig::default(),
            label_power_dbm: 40.0,
            pilot_power_dbm: 40.0,
            reference: ReferenceKind::ZeroPhase,
        }
    }

    /// Laptop-sized setup: 4x4 RIS, 32-wide LSTM, 64/32 dense, a 2e4-sample
    /// training split. Preserves the structural shape of the full-scale
    /// pipeline.
    pub fn desk_scale() -> Profile {
        Profile {
            name: "desk".into(),
            system: SystemConfig::desk_scale(),
            hidden: 32,
            dense1: 64,
            dense2: 32,
            feature_mode: FeatureMode::KronEven,
            // 0.8/0.1/0.1 split: 20000 train, 2500 val, 2500 test
            samples: 25_000,
            train: TrainConfig {
                max_epochs: 80,
                ..TrainConfig::default()
            },
            label_power_dbm: 40.0,
            pilot_power_dbm: 40.0,
            reference: ReferenceKind::ZeroPhase,
        }
    }

    pub fn by_name(name: &str) -> Option<Profile> {
        match name {
            "full" => Some(Profile::full_scale()),
            "desk" => Some(Profile::desk_scale()),
            _ => None,
        }
    }

    /// Model dimensions implied by the profile.
    pub fn model_dims(&self) -> ModelDims {
        ModelDims {
            input: self
                .feature_mode
                .dim(self.system.n_tx, self.system.n_ris),
            hidden: self.hidden,
            dense1: self.dense1,
            dense2: self.dense2,
            outputs: self.system.n_h * self.system.n_v,
        }
    }

    /// Copy with the single-label softmax objective instead of multi-label.
    pub fn single_label(mut self) -> Profile {
        self.train.loss = LossKind::SingleLabelSoftmax;
        self
    }

    pub fn from_json(text: &str) -> Result<Profile> {
        let profile: Profile = serde_json::from_str(text)?;
        profile.system.validate()?;
        profile.train.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles_resolve() {
        assert!(Profile::by_name("full").is_some());
        assert!(Profile::by_name("desk").is_some());
        assert!(Profile::by_name("galactic").is_none());
    }

    #[test]
    fn desk_profile_dims() {
        let p = Profile::desk_scale();
        let dims = p.model_dims();
        assert_eq!(dims.input, 64);
        assert_eq!(dims.hidden, 32);
        assert_eq!(dims.outputs, 16);
    }

    #[test]
    fn profile_json_round_trip() {
        let p = Profile::desk_scale();
        let q = Profile::from_json(&p.to_json()).unwrap();
        assert_eq!(p.system, q.system);
        assert_eq!(p.model_dims(), q.model_dims());
    }
}
