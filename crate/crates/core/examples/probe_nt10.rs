//! Scratch probe: desk profile with the paper's N_t=10 restored.

use risbeam_core::dataset::generate_dataset_with;
use risbeam_core::eval::score_on_dataset;
use risbeam_core::neural::*;
use risbeam_core::profile::Profile;
use risbeam_core::ris::ReferenceKind;

fn main() {
    let mut profile = Profile::desk_scale();
    profile.system.seed = 7;
    profile.system.n_tx = 10;
    let t0 = std::time::Instant::now();
    let ds = generate_dataset_with(
        &profile.system, 20_000, 40.0, 40.0, ReferenceKind::ZeroPhase,
        profile.feature_mode, false,
    ).unwrap();
    println!("gen {:?} dim {} mean labels {:.2}", t0.elapsed(), ds.meta.feature_dim, ds.mean_label_count());
    let (train_view, val_view, test_view) = ds.split((0.8, 0.1, 0.1)).unwrap();

    for (hidden, d1, d2, batch, epochs, patience) in [
        (32usize, 64usize, 32usize, 500usize, 60usize, 8usize),
        (64, 128, 64, 500, 60, 8),
    ] {
        let dims = ModelDims { input: ds.meta.feature_dim, hidden, dense1: d1, dense2: d2, outputs: ds.meta.outputs };
        let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
        let tcfg = TrainConfig { batch_size: batch, max_epochs: epochs, patience, seed: 99, ..TrainConfig::default() };
        let t0 = std::time::Instant::now();
        let (trained, history) =
            train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg).unwrap();
        let score = score_on_dataset(&trained, &test_view, 0.5).unwrap();
        println!(
            "H={hidden} d=({d1},{d2}) batch {batch}: {} epochs in {:?} | norm {:.1}% random {:.1}% ratio {:.2} hit {:.1}% exact {:.1}%",
            history.len(), t0.elapsed(),
            score.norm_se_pct, score.random_norm_se_pct,
            score.norm_se_pct / score.random_norm_se_pct,
            score.label_hit_pct, score.exact_match_pct
        );
    }
}
