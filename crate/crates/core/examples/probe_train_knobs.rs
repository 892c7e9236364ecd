//! Scratch probe: training-knob sweep at the pinned desk profile.

use risbeam_core::dataset::generate_dataset_with;
use risbeam_core::eval::score_on_dataset;
use risbeam_core::neural::*;
use risbeam_core::profile::Profile;
use risbeam_core::ris::ReferenceKind;

fn main() {
    let mut profile = Profile::desk_scale();
    profile.system.seed = 7;
    let ds = generate_dataset_with(
        &profile.system, 20_000, 40.0, 40.0, ReferenceKind::ZeroPhase,
        profile.feature_mode, false,
    ).unwrap();
    let (train_view, val_view, test_view) = ds.split((0.8, 0.1, 0.1)).unwrap();

    for (batch, patience, epochs) in [(500usize, 6usize, 60usize), (250, 6, 60), (1000, 6, 60)] {
        let dims = profile.model_dims();
        let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
        let tcfg = TrainConfig {
            batch_size: batch,
            max_epochs: epochs,
            patience,
            seed: 99,
            ..TrainConfig::default()
        };
        let t0 = std::time::Instant::now();
        let (trained, history) =
            train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg).unwrap();
        let score = score_on_dataset(&trained, &test_view, 0.5).unwrap();
        let best = history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        println!(
            "batch {batch}: {} epochs (best val {:.3}) in {:?} | norm {:.1}% random {:.1}% ratio {:.2} hit {:.1}% exact {:.1}%",
            history.len(), best, t0.elapsed(),
            score.norm_se_pct, score.random_norm_se_pct,
            score.norm_se_pct / score.random_norm_se_pct,
            score.label_hit_pct, score.exact_match_pct
        );
    }
}
