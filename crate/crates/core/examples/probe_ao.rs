//! Scratch probe for AO variants and power dependence (not a deliverable).

use nalgebra::DMatrix;
use risbeam_core::baselines::*;
use risbeam_core::channel::{effective_channel, sample_channels, ChannelPair};
use risbeam_core::codebook::build_codebook;
use risbeam_core::config::{dbm_to_watts, SystemConfig};
use risbeam_core::precoding::*;
use risbeam_core::ris::{ris_config_from_phases, C64, RisConfig};
use risbeam_core::rng::stream;

/// AO variant: proxy-score candidates with ideal amplitudes, return real rate.
fn ao_unaware(ch: &ChannelPair, cfg: &SystemConfig, p: f64, noise: f64, grid_n: usize, sweeps: usize, budget_updates: Option<usize>) -> f64 {
    let n = cfg.n_ris;
    let mut phases = vec![0.0f64; n];
    let grid: Vec<f64> = (0..grid_n).map(|k| -std::f64::consts::PI + std::f64::consts::TAU * k as f64 / grid_n as f64).collect();
    let mut updates = 0usize;
    'outer: for _ in 0..sweeps {
        let ris = ris_config_from_phases(&phases, cfg, true).unwrap(); // ideal proxy
        let h_eff = effective_channel(ch, &ris).unwrap();
        let pre = svd_precoder(&h_eff, 1e-8).unwrap();
        let score = |cand: &[f64]| -> f64 {
            let r = ris_config_from_phases(cand, cfg, true).unwrap();
            let h = effective_channel(ch, &r).unwrap();
            spectral_efficiency_det(&h, &pre.precoder, p, noise, pre.n_streams).unwrap()
        };
        let mut improved = false;
        for elem in 0..n {
            if let Some(b) = budget_updates { if updates >= b { break 'outer; } }
            let mut best_phase = phases[elem];
            let mut best = score(&phases);
            for &psi in &grid {
                let mut cand = phases.clone();
                cand[elem] = psi;
                let s = score(&cand);
                if s > best { best = s; best_phase = psi; }
            }
            if best_phase != phases[elem] { phases[elem] = best_phase; improved = true; }
            updates += 1;
        }
        if !improved { break; }
    }
    // evaluate with the hardware model applied
    let real = ris_config_from_phases(&phases, cfg, false).unwrap();
    codeword_rate(ch, &real, p, noise).unwrap()
}

/// Spec stand-in but with a per-element update budget instead of sweeps.
fn ao_budgeted(ch: &ChannelPair, cfg: &SystemConfig, p: f64, noise: f64, grid_n: usize, updates_budget: usize) -> f64 {
    let n = cfg.n_ris;
    let mut phases = vec![0.0f64; n];
    let grid: Vec<f64> = (0..grid_n).map(|k| -std::f64::consts::PI + std::f64::consts::TAU * k as f64 / grid_n as f64).collect();
    let mut updates = 0usize;
    while updates < updates_budget {
        let ris = ris_config_from_phases(&phases, cfg, false).unwrap();
        let h_eff = effective_channel(ch, &ris).unwrap();
        let pre = svd_precoder(&h_eff, 1e-8).unwrap();
        let score = |cand: &[f64]| -> f64 {
            let r = ris_config_from_phases(cand, cfg, false).unwrap();
            let h = effective_channel(ch, &r).unwrap();
            spectral_efficiency_det(&h, &pre.precoder, p, noise, pre.n_streams).unwrap()
        };
        for elem in 0..n {
            if updates >= updates_budget { break; }
            let mut best_phase = phases[elem];
            let mut best = score(&phases);
            for &psi in &grid {
                let mut cand = phases.clone();
                cand[elem] = psi;
                let s = score(&cand);
                if s > best { best = s; best_phase = psi; }
            }
            phases[elem] = best_phase;
            updates += 1;
        }
    }
    let real = ris_config_from_phases(&phases, cfg, false).unwrap();
    codeword_rate(ch, &real, p, noise).unwrap()
}

fn main() {
    let mut cfg = SystemConfig::full_scale();
    cfg.seed = 31337;
    let cb = build_codebook(&cfg, false).unwrap();
    let noise = cfg.noise_watts();
    let trials = 30;

    for p_dbm in [20.0, 30.0, 40.0] {
        let p = dbm_to_watts(p_dbm);
        let (mut es, mut ao_spec, mut ao_un, mut ao_b30, mut rnd) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut pick = stream(cfg.seed, "probe-rand", p_dbm as u64);
        for i in 0..trials {
            let ch = sample_channels(&cfg, &mut stream(cfg.seed, "chan", i));
            let out = exhaustive_search(&ch, &cb, p, noise).unwrap();
            es += out.best_rate;
            ao_spec += alternating_optimization(&ch, &cfg, p, noise, 16, 30).1;
            ao_un += ao_unaware(&ch, &cfg, p, noise, 16, 30, None);
            ao_b30 += ao_budgeted(&ch, &cfg, p, noise, 16, 30);
            rnd += out.rates[random_selection(&cb, &mut pick)];
        }
        let n = trials as f64;
        println!("P={p_dbm} dBm: ES {:.3} AOspec {:.3} AOunaware {:.3} AObudget30 {:.3} Random {:.3} | ES/Rnd {:.2} AOspec/ES {:.2} AOun/ES {:.2} AOb30/ES {:.2}",
            es/n, ao_spec/n, ao_un/n, ao_b30/n, rnd/n, es/rnd, ao_spec/es, ao_un/es, ao_b30/es);
    }
    let _ = DMatrix::<C64>::zeros(1,1);
    let _ = RisConfig::reference(&cfg);
}
