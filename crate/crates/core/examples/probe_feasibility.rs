//! Scratch feasibility probe (not part of the deliverable test suite).

use risbeam_core::baselines::*;
use risbeam_core::channel::sample_channels;
use risbeam_core::codebook::build_codebook;
use risbeam_core::config::{dbm_to_watts, SystemConfig};
use risbeam_core::dataset::generate_dataset;
use risbeam_core::eval::score_on_dataset;
use risbeam_core::neural::*;
use risbeam_core::profile::Profile;
use risbeam_core::rng::stream;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "ordering".into());
    match which.as_str() {
        "ordering" => ordering(),
        "learning" => learning(),
        _ => panic!("unknown probe"),
    }
}

fn ordering() {
    // criterion 5 probe: full-scale config, 50 realizations at 40 dBm
    let mut cfg = SystemConfig::full_scale();
    cfg.seed = 424242;
    let cb = build_codebook(&cfg, false).unwrap();
    let p = dbm_to_watts(40.0);
    let noise = cfg.noise_watts();
    let trials = 200;
    let (mut es, mut ao, mut rnd) = (0.0, 0.0, 0.0);
    let mut pick = stream(cfg.seed, "probe-rand", 0);
    let t0 = std::time::Instant::now();
    for i in 0..trials {
        let ch = sample_channels(&cfg, &mut stream(cfg.seed, "chan", i));
        let out = exhaustive_search(&ch, &cb, p, noise).unwrap();
        es += out.best_rate;
        let (_, ao_rate) = alternating_optimization(&ch, &cfg, p, noise, 16, 30);
        ao += ao_rate;
        rnd += out.rates[random_selection(&cb, &mut pick)];
    }
    let n = trials as f64;
    println!("elapsed {:?}", t0.elapsed());
    println!("ES mean {:.4}  AO mean {:.4}  Random mean {:.4}", es / n, ao / n, rnd / n);
    println!("ES/Random = {:.3}  AO/ES = {:.3}", es / rnd, ao / es);
}

fn learning() {
    // criterion 6 probe at reduced sample count
    let mut profile = Profile::desk_scale();
    profile.system.seed = 7;
    let samples: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(4000);
    let epochs: usize = std::env::args().nth(3).map(|s| s.parse().unwrap()).unwrap_or(20);
    let t0 = std::time::Instant::now();
    let ds = generate_dataset(&profile.system, samples, profile.label_power_dbm, profile.feature_mode, false).unwrap();
    println!("dataset {:?} gen in {:?}, mean label count {:.2}", samples, t0.elapsed(), ds.mean_label_count());

    let (train_view, val_view, test_view) = ds.split((0.8, 0.1, 0.1)).unwrap();
    let dims = profile.model_dims();
    let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
    let mut tcfg = profile.train.clone();
    tcfg.max_epochs = epochs;
    tcfg.patience = 1000; // no early stop in the probe
    tcfg.seed = 99;
    let t0 = std::time::Instant::now();
    let (trained, history) = train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg).unwrap();
    println!("trained {} epochs in {:?}", history.len(), t0.elapsed());
    for h in history.iter().step_by(4.max(history.len()/8)) {
        println!("  epoch {}: train {:.4} val {:.4}", h.epoch, h.train_loss, h.val_loss);
    }
    let score = score_on_dataset(&trained, &test_view, tcfg.sigmoid_threshold).unwrap();
    println!("test score: {:?}", score);
}
