//! Scratch probe: NN information-ceiling check and N_t=10 desk variant.

use rayon::prelude::*;
use risbeam_core::baselines::{argmax, exhaustive_search};
use risbeam_core::channel::sample_channels;
use risbeam_core::codebook::build_codebook;
use risbeam_core::config::dbm_to_watts;
use risbeam_core::neural::*;
use risbeam_core::pilots::*;
use risbeam_core::profile::Profile;
use risbeam_core::ris::RisConfig;
use risbeam_core::rng::stream;

struct Synth {
    features: Vec<f32>,
    labels: Vec<u8>,
    rates: Vec<f32>,
    steps: usize,
    dim: usize,
    q: usize,
}

fn synth(n_tx: usize, label_p: f64, noiseless: bool, samples: usize) -> Synth {
    let mut profile = Profile::desk_scale();
    profile.system.seed = 7;
    profile.system.n_tx = n_tx;
    let cfg = &profile.system;
    let mode = profile.feature_mode;
    let codebook = build_codebook(cfg, false).unwrap();
    let reference = RisConfig::reference(cfg);
    let pilots = generate_pilots(cfg, dbm_to_watts(40.0), &mut stream(cfg.seed, "pilot", 0));
    let p = dbm_to_watts(label_p);
    let noise = cfg.noise_watts();
    let up_noise = if noiseless { 0.0 } else { noise };
    let scale = feature_scale(cfg);
    let dim = mode.dim(cfg.n_tx, cfg.n_ris);
    let steps = cfg.pilot_len;
    let q = codebook.len();

    let mut features = vec![0.0f32; samples * steps * dim];
    let mut labels = vec![0u8; samples * q];
    let mut rates = vec![0.0f32; samples * q];
    features
        .par_chunks_mut(steps * dim)
        .zip(labels.par_chunks_mut(q).zip(rates.par_chunks_mut(q)))
        .enumerate()
        .for_each(|(i, (fs, (ls, rs)))| {
            let ch = sample_channels(cfg, &mut stream(cfg.seed, "chan", i as u64));
            let r = uplink_receive(&ch, &reference, &pilots, up_noise, &mut stream(cfg.seed, "noise", i as u64)).unwrap();
            let feats = preprocess_features(&r, &reference, mode);
            let mut k = 0;
            for step in &feats.steps {
                for &v in step {
                    fs[k] = (v * scale) as f32;
                    k += 1;
                }
            }
            let out = exhaustive_search(&ch, &codebook, p, noise).unwrap();
            for (j, &b) in out.label_set.iter().enumerate() {
                ls[j] = u8::from(b);
            }
            ls[argmax(&out.rates)] = 2;
            for (j, &r) in out.rates.iter().enumerate() {
                rs[j] = r as f32;
            }
        });
    Synth { features, labels, rates, steps, dim, q }
}

fn nn_oracle(s: &Synth, n_train: usize, n_test: usize) {
    let fd = s.steps * s.dim;
    let results: Vec<(f64, f64)> = (0..n_test)
        .into_par_iter()
        .map(|t| {
            let ti = n_train + t;
            let tf = &s.features[ti * fd..(ti + 1) * fd];
            let mut best_d = f32::INFINITY;
            let mut best_i = 0usize;
            for i in 0..n_train {
                let f = &s.features[i * fd..(i + 1) * fd];
                let mut d = 0.0f32;
                for (a, b) in tf.iter().zip(f) {
                    let x = a - b;
                    d += x * x;
                    if d > best_d { break; }
                }
                if d < best_d { best_d = d; best_i = i; }
            }
            let pick = s.labels[best_i * s.q..(best_i + 1) * s.q].iter().position(|&b| b == 2).unwrap();
            let r = &s.rates[ti * s.q..(ti + 1) * s.q];
            let best_rate = r.iter().cloned().fold(0.0f32, f32::max);
            (f64::from(r[pick]), f64::from(best_rate))
        })
        .collect();
    let picked: f64 = results.iter().map(|r| r.0).sum();
    let best: f64 = results.iter().map(|r| r.1).sum();
    println!("  NN oracle norm SE: {:.1}%", 100.0 * picked / best);
}

fn train_and_score(s: &Synth, hidden: usize, d1: usize, d2: usize, epochs: usize) {
    let n_train = 16_000;
    let n_val = 2_000;
    let n_test = 2_000;
    let sl = |lo: usize, n: usize| BatchSource {
        features: &s.features[lo * s.steps * s.dim..(lo + n) * s.steps * s.dim],
        labels: &s.labels[lo * s.q..(lo + n) * s.q],
        steps: s.steps, dim: s.dim, outputs: s.q, count: n,
    };
    let dims = ModelDims { input: s.dim, hidden, dense1: d1, dense2: d2, outputs: s.q };
    let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
    let tcfg = TrainConfig { max_epochs: epochs, patience: 4, seed: 99, ..TrainConfig::default() };
    let t0 = std::time::Instant::now();
    let (trained, history) = train(&sl(0, n_train), &sl(n_train, n_val), params, &tcfg).unwrap();
    let test_lo = n_train + n_val;
    let (mut picked, mut best_sum, mut uni) = (0.0, 0.0, 0.0);
    let src = sl(test_lo, n_test);
    let rows: Vec<usize> = (0..n_test).collect();
    for chunk in rows.chunks(512) {
        let (stepsv, _, _) = src.gather(chunk);
        let probs = trained.forward_infer(&stepsv).unwrap();
        for (r, &i) in chunk.iter().enumerate() {
            let row: Vec<f64> = probs.row(r).to_vec();
            let pick = decode_codeword(&row, 0.5).unwrap();
            let gr = &s.rates[(test_lo + i) * s.q..(test_lo + i + 1) * s.q];
            picked += f64::from(gr[pick]);
            best_sum += f64::from(gr.iter().cloned().fold(0.0f32, f32::max));
            uni += gr.iter().map(|&v| f64::from(v)).sum::<f64>() / s.q as f64;
        }
    }
    println!(
        "  LSTM: {} epochs in {:?} | norm {:.1}% random {:.1}% ratio {:.2}",
        history.len(), t0.elapsed(),
        100.0 * picked / best_sum,
        100.0 * uni / best_sum,
        picked / uni
    );
}

fn main() {
    println!("== N_t=4, 40 dBm labels, noiseless uplink: NN ceiling ==");
    let s = synth(4, 40.0, true, 20_000);
    nn_oracle(&s, 16_000, 2_000);

    println!("== N_t=10 desk variant, 40 dBm labels, noisy uplink ==");
    let s10 = synth(10, 40.0, false, 20_000);
    nn_oracle(&s10, 16_000, 2_000);
    train_and_score(&s10, 32, 64, 32, 40);
}
