//! Rician fading channel realization for the BS-RIS and RIS-user links,
//! beam-steering vectors, path loss, and the cascaded effective channel.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ris::{C64, RisConfig};

/// One realization of the two link channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    /// BS to RIS channel, `n_ris x n_tx`.
    pub h_t: DMatrix<C64>,
    /// RIS to user channel (Hermitian side), `n_rx x n_ris`.
    pub h_r_herm: DMatrix<C64>,
    /// Linear path loss factor of the BS-RIS link.
    pub loss_t: f64,
    /// Linear path loss factor of the RIS-user link.
    pub loss_r: f64,
}

/// Uniform linear array steering vector: element `m` is `exp(-j m theta)`.
pub fn steering_vector(n: usize, theta: f64) -> Result<DVector<C64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "steering vector length must be >= 1".into(),
        ));
    }
    Ok(DVector::from_iterator(
        n,
        (0..n).map(|m| C64::from_polar(1.0, -(m as f64) * theta)),
    ))
}

/// Linear-scale path loss `10^((L0 - 10*exp*log10(d/D0) + G_ris)/10)`.
///
/// Strictly decreasing in distance for positive exponents.
pub fn path_loss_linear(exp: f64, dist: f64, cfg: &SystemConfig) -> Result<f64> {
    if dist < cfg.ref_dist {
        return Err(Error::InvalidArgument(format!(
            "distance {dist} below reference distance {}",
            cfg.ref_dist
        )));
    }
    let db = cfg.ref_loss_db - 10.0 * exp * (dist / cfg.ref_dist).log10() + cfg.ris_gain_db;
    Ok(10f64.powf(db / 10.0))
}

/// Complex Gaussian sample with total variance `var` (CN(0, var)).
fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Kronecker product of two steering vectors, first factor major.
fn kron(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Draws the path gain for path `ell`: the LOS path (`ell = 0`) has the fixed
/// real gain `sqrt(K/(K+1))`; NLOS gains are CN(0, 1/(L(K+1))).
fn path_gain<R: Rng>(rng: &mut R, ell: usize, rician: f64, n_paths: usize) -> C64 {
    if ell == 0 {
        C64::new((rician / (rician + 1.0)).sqrt(), 0.0)
    } else {
        complex_gaussian(rng, 1.0 / (n_paths as f64 * (rician + 1.0)))
    }
}

fn uniform_angle<R: Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>() * std::f64::consts::TAU
}

/// Samples one Rician channel pair.
///
/// Per path, the BS-RIS link draws (phi_h, phi_v, theta_t) and a gain, then
/// accumulates the rank-1 term
/// `gain * conj(a_{N_h}(phi_h) (x) a_{N_v}(phi_v)) * a_{N_t}(theta_t)^T`;
/// the RIS-user link draws (theta_r, vphi_v, vphi_h) and accumulates
/// `gain * conj(a_{N_r}(theta_r)) * (a_{N_v}(vphi_v) (x) a_{N_h}(vphi_h))^T`.
/// All angles are independent uniform on [0, 2pi). Draw order is fixed, so a
/// given (config, stream) reproduces the same matrices bitwise.
pub fn sample_channels<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> ChannelPair {
    let n = cfg.n_ris;
    let loss_t = path_loss_linear(cfg.pl_exp_t, cfg.dist_t, cfg)
        .expect("validated config keeps dist_t >= ref_dist");
    let loss_r = path_loss_linear(cfg.pl_exp_r, cfg.dist_r, cfg)
        .expect("validated config keeps dist_r >= ref_dist");

    let mut h_t = DMatrix::<C64>::zeros(n, cfg.n_tx);
    for ell in 0..=cfg.n_paths {
        let phi_h = uniform_angle(rng);
        let phi_v = uniform_angle(rng);
        let theta_t = uniform_angle(rng);
        let gain = path_gain(rng, ell, cfg.rician_t, cfg.n_paths);

        let arrive = kron(
            &steering_vector(cfg.n_h, phi_h).unwrap(),
            &steering_vector(cfg.n_v, phi_v).unwrap(),
        )
        .map(|c| c.conj());
        let depart = steering_vector(cfg.n_tx, theta_t).unwrap();
        for r in 0..n {
            for c in 0..cfg.n_tx {
                h_t[(r, c)] += gain * arrive[r] * depart[c];
            }
        }
    }
    h_t *= C64::new(loss_t.sqrt(), 0.0);

    let mut h_r_herm = DMatrix::<C64>::zeros(cfg.n_rx, n);
    for ell in 0..=cfg.n_paths {
        let theta_r = uniform_angle(rng);
        let vphi_v = uniform_angle(rng);
        let vphi_h = uniform_angle(rng);
        let gain = path_gain(rng, ell, cfg.rician_r, cfg.n_paths);

        let user_side = steering_vector(cfg.n_rx, theta_r).unwrap().map(|c| c.conj());
        let ris_side = kron(
            &steering_vector(cfg.n_v, vphi_v).unwrap(),
            &steering_vector(cfg.n_h, vphi_h).unwrap(),
        );
        for r in 0..cfg.n_rx {
            for c in 0..n {
                h_r_herm[(r, c)] += gain * user_side[r] * ris_side[c];
            }
        }
    }
    h_r_herm *= C64::new(loss_r.sqrt(), 0.0);

    ChannelPair {
        h_t,
        h_r_herm,
        loss_t,
        loss_r,
    }
}

/// Cascaded channel `H_r^H diag(response) H_t`, computed by scaling the rows
/// of `H_t` with the RIS response.
pub fn effective_channel(ch: &ChannelPair, ris: &RisConfig) -> Result<DMatrix<C64>> {
    let n = ch.h_t.nrows();
    if ris.response.len() != n || ch.h_r_herm.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "RIS response length {} vs channel dims {}x{} / {}x{}",
            ris.response.len(),
            ch.h_t.nrows(),
            ch.h_t.ncols(),
            ch.h_r_herm.nrows(),
            ch.h_r_herm.ncols()
        )));
    }
    let mut scaled = ch.h_t.clone();
    for (r, &w) in ris.response.iter().enumerate() {
        for c in 0..scaled.ncols() {
            scaled[(r, c)] *= w;
        }
    }
    Ok(&ch.h_r_herm * scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::ris_config_from_phases;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn steering_zero_phase_is_all_ones() {
        let v = steering_vector(4, 0.0).unwrap();
        for c in v.iter() {
            assert_eq!(*c, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn steering_pi_alternates() {
        let v = steering_vector(2, std::f64::consts::PI).unwrap();
        assert_relative_eq!(v[0].re, 1.0, max_relative = 1e-15);
        assert_relative_eq!(v[1].re, -1.0, max_relative = 1e-12);
        assert!(v[1].im.abs() < 1e-12);
    }

    #[test]
    fn steering_zero_length_rejected() {
        assert!(steering_vector(0, 1.0).is_err());
    }

    #[test]
    fn steering_norm_is_sqrt_n() {
        for n in [1usize, 3, 8, 17] {
            let v = steering_vector(n, 0.77).unwrap();
            assert_relative_eq!(v.norm(), (n as f64).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn dft_grid_steering_vectors_are_orthogonal() {
        let n = 8;
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let a = steering_vector(n, std::f64::consts::TAU * k as f64 / n as f64).unwrap();
                let b = steering_vector(n, std::f64::consts::TAU * l as f64 / n as f64).unwrap();
                let ip: C64 = a.dotc(&b);
                assert!(ip.norm() < 1e-9 * n as f64, "({k},{l}) inner product {ip}");
            }
        }
    }

    #[test]
    fn path_loss_at_reference_distance() {
        let mut cfg = SystemConfig::default();
        cfg.ref_loss_db = -30.0;
        cfg.ris_gain_db = 5.0;
        cfg.ref_dist = 1.0;
        let l = path_loss_linear(2.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(l, 10f64.powf(-2.5), max_relative = 1e-12);
    }

    #[test]
    fn path_loss_decade() {
        let cfg = SystemConfig::default();
        let l = path_loss_linear(2.0, 10.0, &cfg).unwrap();
        assert_relative_eq!(l, 10f64.powf(-4.5), max_relative = 1e-12);
    }

    #[test]
    fn path_loss_ris_user_default_link() {
        let cfg = SystemConfig::default();
        let l = path_loss_linear(2.8, 30.0, &cfg).unwrap();
        // (-30 - 28*log10(30) + 5) dB = -66.35939 dB
        assert_relative_eq!(l, 2.3128e-7, max_relative = 1e-3);
    }

    #[test]
    fn path_loss_below_reference_rejected() {
        let cfg = SystemConfig::default();
        assert!(path_loss_linear(2.0, 0.5, &cfg).is_err());
    }

    #[test]
    fn path_loss_monotone_decreasing() {
        let cfg = SystemConfig::default();
        let mut last = f64::INFINITY;
        for d in [1.0, 2.0, 5.0, 10.0, 50.0, 200.0] {
            let l = path_loss_linear(2.8, d, &cfg).unwrap();
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn channels_are_deterministic_given_stream() {
        let cfg = SystemConfig::default();
        let a = sample_channels(&cfg, &mut stream(42, "chan", 0));
        let b = sample_channels(&cfg, &mut stream(42, "chan", 0));
        assert_eq!(a, b);
        let c = sample_channels(&cfg, &mut stream(42, "chan", 1));
        assert_ne!(a, c);
    }

    #[test]
    fn los_only_channel_has_constant_magnitude() {
        let mut cfg = SystemConfig::default();
        cfg.rician_t = 1e12;
        cfg.rician_r = 1e12;
        let ch = sample_channels(&cfg, &mut stream(1, "chan", 0));
        let expect = ch.loss_t.sqrt();
        for c in ch.h_t.iter() {
            assert_relative_eq!(c.norm(), expect, max_relative = 1e-5);
        }
    }

    #[test]
    fn nlos_gain_second_moment() {
        // E|z|^2 = 1/(L(K+1)) = 1/22 for K=10, L=2. The squared magnitude of a
        // CN(0,v) sample is v * Exp(1) with std v, so 1e5 draws give a standard
        // error of v/sqrt(1e5).
        let cfg = SystemConfig::default();
        let mut rng = stream(9, "gains", 0);
        let draws = 100_000;
        let var = 1.0 / (cfg.n_paths as f64 * (cfg.rician_t + 1.0));
        let mut acc = 0.0;
        for _ in 0..draws {
            let z = complex_gaussian(&mut rng, var);
            acc += z.norm_sqr();
        }
        let mean = acc / draws as f64;
        let se = var / (draws as f64).sqrt();
        assert!(
            (mean - var).abs() < 5.0 * se,
            "mean {mean} expected {var} +- {se}"
        );
    }

    #[test]
    fn effective_channel_identity_response() {
        let cfg = SystemConfig::desk_scale();
        let ch = sample_channels(&cfg, &mut stream(3, "chan", 0));
        let ris = ris_config_from_phases(&vec![0.0; cfg.n_ris], &cfg, true).unwrap();
        let h_eff = effective_channel(&ch, &ris).unwrap();
        let direct = &ch.h_r_herm * &ch.h_t;
        assert!((h_eff - direct).norm() < 1e-12);
    }

    #[test]
    fn effective_channel_zero_response() {
        let cfg = SystemConfig::desk_scale();
        let ch = sample_channels(&cfg, &mut stream(3, "chan", 1));
        let mut ris = ris_config_from_phases(&vec![0.0; cfg.n_ris], &cfg, true).unwrap();
        ris.response.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        let h_eff = effective_channel(&ch, &ris).unwrap();
        assert_eq!(h_eff.norm(), 0.0);
    }

    #[test]
    fn effective_channel_is_linear_in_response() {
        let cfg = SystemConfig::desk_scale();
        let ch = sample_channels(&cfg, &mut stream(3, "chan", 2));
        let phases: Vec<f64> = (0..cfg.n_ris).map(|n| n as f64 * 0.21).collect();
        let ris = ris_config_from_phases(&phases, &cfg, false).unwrap();
        let base = effective_channel(&ch, &ris).unwrap();

        let scale = C64::new(0.3, -0.9);
        let mut scaled = ris.clone();
        scaled.response.iter_mut().for_each(|c| *c *= scale);
        let out = effective_channel(&ch, &scaled).unwrap();
        assert!((out - base.map(|c| c * scale)).norm() <= 1e-12 * base.norm());
    }

    #[test]
    fn effective_channel_dimension_mismatch() {
        let cfg = SystemConfig::desk_scale();
        let big = SystemConfig::default();
        let ch = sample_channels(&cfg, &mut stream(3, "chan", 3));
        let ris = ris_config_from_phases(&vec![0.0; big.n_ris], &big, true).unwrap();
        assert!(effective_channel(&ch, &ris).is_err());
    }
}
