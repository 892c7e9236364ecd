//! Scratch experiment grid for the desk-scale operating point (not a deliverable).

use risbeam_core::dataset::generate_dataset_with;
use risbeam_core::eval::score_on_dataset;
use risbeam_core::neural::*;
use risbeam_core::profile::Profile;
use risbeam_core::ris::ReferenceKind;

fn main() {
    let samples = 20_000;
    for (label_p, reference) in [
        (40.0, ReferenceKind::ZeroPhase),
        (40.0, ReferenceKind::SeededRandom),
        (30.0, ReferenceKind::SeededRandom),
        (20.0, ReferenceKind::SeededRandom),
    ] {
        let mut profile = Profile::desk_scale();
        profile.system.seed = 7;
        let t0 = std::time::Instant::now();
        let ds = generate_dataset_with(
            &profile.system, samples, label_p, 40.0, reference,
            profile.feature_mode, false,
        ).unwrap();
        let (train_view, val_view, test_view) = ds.split((0.8, 0.1, 0.1)).unwrap();
        let dims = profile.model_dims();
        let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
        let mut tcfg = profile.train.clone();
        tcfg.max_epochs = 30;
        tcfg.patience = 4;
        tcfg.seed = 99;
        let (trained, history) = train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg).unwrap();
        let score = score_on_dataset(&trained, &test_view, tcfg.sigmoid_threshold).unwrap();
        let best = history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        println!(
            "labelP={label_p} ref={reference:?}: epochs {} (best val {:.3}) in {:?} | norm {:.1}% random {:.1}% hit {:.1}% exact {:.1}% | ratio {:.2}",
            history.len(), best, t0.elapsed(),
            score.norm_se_pct, score.random_norm_se_pct, score.label_hit_pct, score.exact_match_pct,
            score.norm_se_pct / score.random_norm_se_pct,
        );
    }
}
