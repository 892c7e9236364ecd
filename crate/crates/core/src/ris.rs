//! RIS element response: phase shifts with phase-dependent reflection
//! amplitude.

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Which fixed RIS state receives the uplink pilots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    ZeroPhase,
    SeededRandom,
}

/// One RIS configuration: per-element phase, amplitude, and the resulting
/// complex response vector with entries `beta_n * exp(j psi_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub phases: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub response: DVector<C64>,
}

/// Reflection amplitude as a function of the applied phase shift:
/// `beta = (1 - beta_min) * ((sin(psi - psi0) + 1) / 2)^alpha + beta_min`.
///
/// Total over all finite `psi`; the result lies in `[beta_min, 1]`.
pub fn amplitude_model(psi: f64, cfg: &SystemConfig) -> f64 {
    let s = ((psi - cfg.psi0).sin() + 1.0) / 2.0;
    (1.0 - cfg.beta_min) * s.powf(cfg.alpha) + cfg.beta_min
}

/// Builds a [`RisConfig`] from per-element phases.
///
/// With `ideal` set, every amplitude is 1; otherwise amplitudes follow the
/// hardware model.
pub fn ris_config_from_phases(phases: &[f64], cfg: &SystemConfig, ideal: bool) -> Result<RisConfig> {
    if phases.len() != cfg.n_ris {
        return Err(Error::DimensionMismatch(format!(
            "expected {} phases, got {}",
            cfg.n_ris,
            phases.len()
        )));
    }
    let amplitudes: Vec<f64> = if ideal {
        vec![1.0; phases.len()]
    } else {
        phases.iter().map(|&p| amplitude_model(p, cfg)).collect()
    };
    let response = DVector::from_iterator(
        phases.len(),
        phases
            .iter()
            .zip(&amplitudes)
            .map(|(&psi, &beta)| C64::from_polar(beta, psi)),
    );
    Ok(RisConfig {
        phases: phases.to_vec(),
        amplitudes,
        response,
    })
}

impl RisConfig {
    /// The dataset-wide reference state used when receiving pilots: all-zero
    /// phases with hardware amplitudes.
    pub fn reference(cfg: &SystemConfig) -> RisConfig {
        ris_config_from_phases(&vec![0.0; cfg.n_ris], cfg, false)
            .expect("phase count matches cfg by construction")
    }

    /// Seeded-random reference state: fixed per dataset, uniform phases with
    /// hardware amplitudes. Breaks the element-permutation symmetry of the
    /// all-zero state, which helps the pilots distinguish RIS-side structure.
    pub fn random_reference(cfg: &SystemConfig) -> RisConfig {
        use rand::Rng;
        let mut rng = crate::rng::stream(cfg.seed, "reference-state", 0);
        let phases: Vec<f64> = (0..cfg.n_ris)
            .map(|_| rng.gen::<f64>() * std::f64::consts::TAU - std::f64::consts::PI)
            .collect();
        ris_config_from_phases(&phases, cfg, false).expect("phase count matches cfg")
    }

    /// Builds the reference state of the given kind for this config.
    pub fn reference_of_kind(cfg: &SystemConfig, kind: ReferenceKind) -> RisConfig {
        match kind {
            ReferenceKind::ZeroPhase => RisConfig::reference(cfg),
            ReferenceKind::SeededRandom => RisConfig::random_reference(cfg),
        }
    }

    /// Treats a codebook word (or any complex response vector) as a RIS
    /// configuration, recovering per-element phase and amplitude.
    pub fn from_response(response: DVector<C64>) -> RisConfig {
        let phases: Vec<f64> = response.iter().map(|c| c.arg()).collect();
        let amplitudes: Vec<f64> = response.iter().map(|c| c.norm()).collect();
        RisConfig {
            phases,
            amplitudes,
            response,
        }
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn amplitude_extremes_are_exact() {
        let cfg = cfg();
        assert_eq!(amplitude_model(cfg.psi0 + PI / 2.0, &cfg), 1.0);
        assert_eq!(amplitude_model(cfg.psi0 - PI / 2.0, &cfg), cfg.beta_min);
    }

    #[test]
    fn amplitude_at_psi0() {
        let cfg = cfg();
        // (1 - 0.2) * 0.5^1.6 + 0.2
        let expect = 0.8 * 0.5f64.powf(1.6) + 0.2;
        assert!((expect - 0.46390).abs() < 1e-5);
        assert!((amplitude_model(cfg.psi0, &cfg) - expect).abs() < 1e-12);
    }

    #[test]
    fn amplitude_range_over_phase_sweep() {
        let cfg = cfg();
        for k in -400..400 {
            let psi = k as f64 * 0.017;
            let beta = amplitude_model(psi, &cfg);
            assert!(beta >= cfg.beta_min - 1e-15 && beta <= 1.0 + 1e-15, "beta {beta} out of range");
        }
    }

    #[test]
    fn zero_phase_ideal_response_is_all_ones() {
        let cfg = cfg();
        let ris = ris_config_from_phases(&vec![0.0; cfg.n_ris], &cfg, true).unwrap();
        for c in ris.response.iter() {
            assert_eq!(*c, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn zero_phase_practical_amplitude() {
        let cfg = cfg();
        let ris = ris_config_from_phases(&vec![0.0; cfg.n_ris], &cfg, false).unwrap();
        for &a in &ris.amplitudes {
            assert!((a - 0.2007).abs() < 2e-4, "amplitude {a}");
        }
    }

    #[test]
    fn max_gain_phase_practical_amplitude_is_one() {
        let cfg = cfg();
        let ris =
            ris_config_from_phases(&vec![cfg.psi0 + PI / 2.0; cfg.n_ris], &cfg, false).unwrap();
        for &a in &ris.amplitudes {
            assert_eq!(a, 1.0);
        }
    }

    #[test]
    fn response_modulus_matches_amplitude() {
        let cfg = cfg();
        let phases: Vec<f64> = (0..cfg.n_ris).map(|n| (n as f64) * 0.3 - 2.0).collect();
        let ris = ris_config_from_phases(&phases, &cfg, false).unwrap();
        for (c, &a) in ris.response.iter().zip(&ris.amplitudes) {
            assert!((c.norm() - a).abs() < 1e-14);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let cfg = cfg();
        assert!(ris_config_from_phases(&[0.0; 3], &cfg, true).is_err());
    }
}
