//! System configuration: antenna geometry, channel statistics, hardware
//! model parameters, powers, and pilot length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a dBm power to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a dB gain/loss to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// All physical and pilot constants of the simulated link.
///
/// Serializes to a flat JSON document with snake_case keys; unknown keys are
/// rejected so stale configs fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas (N_t).
    pub n_tx: usize,
    /// User antennas (N_r).
    pub n_rx: usize,
    /// RIS elements along the horizontal dimension (N_h).
    pub n_h: usize,
    /// RIS elements along the vertical dimension (N_v).
    pub n_v: usize,
    /// Total RIS elements; must equal `n_h * n_v`.
    pub n_ris: usize,
    /// Number of NLOS paths (L).
    pub n_paths: usize,
    /// Rician factor of the BS-RIS link (K_t).
    pub rician_t: f64,
    /// Rician factor of the RIS-user link (K_r).
    pub rician_r: f64,
    /// Path loss exponent of the BS-RIS link.
    pub pl_exp_t: f64,
    /// Path loss exponent of the RIS-user link.
    pub pl_exp_r: f64,
    /// BS-RIS distance in meters.
    pub dist_t: f64,
    /// RIS-user distance in meters.
    pub dist_r: f64,
    /// Reference distance D_0 in meters.
    pub ref_dist: f64,
    /// Path loss at the reference distance, in dB.
    pub ref_loss_db: f64,
    /// RIS gain in dB.
    pub ris_gain_db: f64,
    /// Minimum reflection amplitude of the hardware model.
    pub beta_min: f64,
    /// Shaping exponent of the hardware model.
    pub alpha: f64,
    /// Minimum-gain phase of the hardware model, radians.
    pub psi0: f64,
    /// Noise power in dBm.
    pub noise_dbm: f64,
    /// Transmit power sweep in dBm.
    pub powers_dbm: Vec<f64>,
    /// Uplink pilot length (K).
    pub pilot_len: usize,
    /// Root seed for all derived random streams.
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::full_scale()
    }
}

impl SystemConfig {
    /// The full-scale setup: 10x2 MIMO, 8x8 RIS, 2 NLOS paths.
    pub fn full_scale() -> Self {
        SystemConfig {
            n_tx: 10,
            n_rx: 2,
            n_h: 8,
            n_v: 8,
            n_ris: 64,
            n_paths: 2,
            rician_t: 10.0,
            rician_r: 10.0,
            pl_exp_t: 2.0,
            pl_exp_r: 2.8,
            dist_t: 10.0,
            dist_r: 30.0,
            ref_dist: 1.0,
            ref_loss_db: -30.0,
            ris_gain_db: 5.0,
            beta_min: 0.2,
            alpha: 1.6,
            psi0: 0.43 * std::f64::consts::PI,
            noise_dbm: -80.0,
            powers_dbm: vec![20.0, 30.0, 40.0, 50.0, 60.0],
            pilot_len: 16,
            seed: 0,
        }
    }

    /// Reduced geometry that keeps every structural property of the
    /// full-scale setup while running end to end on a laptop CPU.
    pub fn desk_scale() -> Self {
        SystemConfig {
            n_tx: 4,
            n_h: 4,
            n_v: 4,
            n_ris: 16,
            pilot_len: 8,
            ..Self::full_scale()
        }
    }

    /// Total RIS element count (N).
    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    /// Noise power in watts.
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// Checks the structural invariants of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_h == 0 || self.n_v == 0 {
            return Err(Error::InvalidArgument(
                "antenna and RIS counts must be >= 1".into(),
            ));
        }
        if self.n_ris != self.n_h * self.n_v {
            return Err(Error::Inconsistent(format!(
                "n_ris = {} but n_h * n_v = {}",
                self.n_ris,
                self.n_h * self.n_v
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be >= 1".into()));
        }
        if !(self.beta_min > 0.0 && self.beta_min <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta_min must lie in (0, 1], got {}",
                self.beta_min
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if !(self.ref_dist > 0.0) {
            return Err(Error::InvalidArgument("ref_dist must be positive".into()));
        }
        if self.dist_t < self.ref_dist || self.dist_r < self.ref_dist {
            return Err(Error::InvalidArgument(
                "link distances must be >= ref_dist".into(),
            ));
        }
        if self.rician_t < 0.0 || self.rician_r < 0.0 {
            return Err(Error::InvalidArgument(
                "Rician factors must be >= 0".into(),
            ));
        }
        if self.pilot_len == 0 {
            return Err(Error::InvalidArgument("pilot_len must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses a config from its JSON form, validating invariants.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes the config to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Hex SHA-256 of the canonical (compact) JSON form; used to tag reports.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let compact = serde_json::to_string(self).expect("config serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(compact.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.n_tx, 10);
        assert_eq!(cfg.n_rx, 2);
        assert_eq!(cfg.n_h, 8);
        assert_eq!(cfg.n_v, 8);
        assert_eq!(cfg.n_ris, 64);
        assert_eq!(cfg.n_paths, 2);
        assert_eq!(cfg.rician_t, 10.0);
        assert_eq!(cfg.rician_r, 10.0);
        assert_eq!(cfg.pl_exp_t, 2.0);
        assert_eq!(cfg.dist_t, 10.0);
        assert_eq!(cfg.pl_exp_r, 2.8);
        assert_eq!(cfg.dist_r, 30.0);
        assert_eq!(cfg.ris_gain_db, 5.0);
        assert_eq!(cfg.beta_min, 0.2);
        assert_eq!(cfg.alpha, 1.6);
        assert!((cfg.psi0 - 0.43 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cfg.noise_dbm, -80.0);
        assert_eq!(cfg.powers_dbm, vec![20.0, 30.0, 40.0, 50.0, 60.0]);
        cfg.validate().unwrap();
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-24);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-11);
    }

    #[test]
    fn json_round_trip() {
        let cfg = SystemConfig::desk_scale();
        let text = cfg.to_json();
        let back = SystemConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(&SystemConfig::default().to_json()).unwrap();
        value["bogus_key"] = serde_json::json!(1);
        let err = SystemConfig::from_json(&value.to_string());
        assert!(err.is_err());
    }

    #[test]
    fn inconsistent_n_ris_rejected() {
        let mut cfg = SystemConfig::default();
        cfg.n_ris = 63;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn desk_scale_is_valid() {
        let cfg = SystemConfig::desk_scale();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_ris, 16);
    }
}
