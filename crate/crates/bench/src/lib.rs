//! Shared setup helpers for the criterion benchmarks.

use risbeam_core::channel::{sample_channels, ChannelPair};
use risbeam_core::codebook::{build_codebook, Codebook};
use risbeam_core::config::SystemConfig;
use risbeam_core::neural::{HeadKind, ModelDims, ModelParams};
use risbeam_core::pilots::FeatureMode;
use risbeam_core::rng::stream;

pub struct BenchSetup {
    pub cfg: SystemConfig,
    pub codebook: Codebook,
    pub channel: ChannelPair,
    pub model: ModelParams,
    pub mode: FeatureMode,
}

/// Full-scale geometry with an untrained (but inference-ready) model.
pub fn full_scale_setup() -> BenchSetup {
    let mut cfg = SystemConfig::full_scale();
    cfg.seed = 1;
    let codebook = build_codebook(&cfg, false).expect("valid config");
    let channel = sample_channels(&cfg, &mut stream(cfg.seed, "bench-chan", 0));
    let mode = FeatureMode::KronEven;
    let dims = ModelDims::full_scale(mode.dim(cfg.n_tx, cfg.n_ris), cfg.n_h * cfg.n_v);
    let mut model = ModelParams::init(dims, HeadKind::Sigmoid, 1);
    model.force_bn_initialized();
    BenchSetup {
        cfg,
        codebook,
        channel,
        model,
        mode,
    }
}
