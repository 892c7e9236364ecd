//! Scratch probe: multi-vs-single label and robustness at desk scale.

use risbeam_core::dataset::generate_dataset;
use risbeam_core::eval::{robustness_study, score_on_dataset};
use risbeam_core::neural::*;
use risbeam_core::profile::Profile;

fn main() {
    let mut profile = Profile::desk_scale();
    profile.system.seed = 7;
    let ds = generate_dataset(&profile.system, 20_000, 40.0, profile.feature_mode, false).unwrap();
    let (train_view, val_view, test_view) = ds.split((0.8, 0.1, 0.1)).unwrap();
    let dims = profile.model_dims();

    let mut tcfg = profile.train.clone();
    tcfg.seed = 99;
    let t0 = std::time::Instant::now();
    let params = ModelParams::init(dims, HeadKind::Sigmoid, 99);
    let (multi, hist_m) = train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg).unwrap();
    let score_m = score_on_dataset(&multi, &test_view, 0.5).unwrap();
    println!("multi: {} epochs {:?} norm {:.2}%", hist_m.len(), t0.elapsed(), score_m.norm_se_pct);

    let mut tcfg_s = tcfg.clone();
    tcfg_s.loss = LossKind::SingleLabelSoftmax;
    let t0 = std::time::Instant::now();
    let params_s = ModelParams::init(dims, HeadKind::Softmax, 99);
    let (single, hist_s) = train(&train_view.batch_source(), &val_view.batch_source(), params_s, &tcfg_s).unwrap();
    let score_s = score_on_dataset(&single, &test_view, 0.5).unwrap();
    println!("single: {} epochs {:?} norm {:.2}%", hist_s.len(), t0.elapsed(), score_s.norm_se_pct);
    println!("multi >= single: {}", score_m.norm_se_pct >= score_s.norm_se_pct);

    let t0 = std::time::Instant::now();
    let rob = robustness_study(&multi, &profile.system, profile.feature_mode, 40.0, 0.2, 200, 0.5, 1234).unwrap();
    println!("robustness in {:?}: unperturbed {:.2}% worst {:.2}% ratio {:.3}",
        t0.elapsed(), rob.unperturbed_norm_se_pct, rob.worst_norm_se_pct,
        rob.worst_norm_se_pct / rob.unperturbed_norm_se_pct);
    for r in &rob.results {
        println!("  {} x{:.1}: {:.2}%", r.parameter, r.factor, r.norm_se_pct);
    }
}
