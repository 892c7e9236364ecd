//! Simulation, codebook search, and learned codeword prediction for
//! RIS-assisted mmWave MIMO links.
//!
//! The crate covers the whole pipeline: Rician channel realization with a
//! phase-dependent RIS amplitude model, the Kronecker DFT codebook, SVD
//! precoding and spectral efficiency, exhaustive-search / alternating /
//! random baselines, uplink pilot features, dataset synthesis, a
//! from-scratch multi-label LSTM classifier, and the evaluation harness.

pub mod baselines;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod neural;
pub mod pilots;
pub mod precoding;
pub mod profile;
pub mod ris;
pub mod rng;

pub use baselines::{
    alternating_optimization, exhaustive_search, near_optimal_label_set, random_selection,
    SearchOutcome, NEAR_OPTIMAL_DELTA_DB,
};
pub use channel::{effective_channel, path_loss_linear, sample_channels, steering_vector, ChannelPair};
pub use codebook::{apply_hardware_model, build_codebook, build_ideal_codebook, quantized_angles, Codebook, CodebookKind};
pub use config::{db_to_linear, dbm_to_watts, SystemConfig};
pub use dataset::{generate_dataset, Dataset, DatasetMeta, DatasetView};
pub use error::{Error, Result};
pub use eval::{
    benchmark_timing, es_cost, export_report, load_report_json, lstm_cost, robustness_study,
    run_power_sweep, score_on_dataset, EvalReport, ReportFormat, Scheme, TimingReport,
};
pub use neural::{
    decode_codeword, gradient_check, load_model, model_forward, save_model, train, BatchSource,
    HeadKind, LossKind, ModelDims, ModelParams, TrainConfig,
};
pub use pilots::{generate_pilots, preprocess_features, uplink_receive, FeatureMode, FeatureSequence};
pub use precoding::{spectral_efficiency, spectral_efficiency_det, svd_precoder, PrecodingResult};
pub use profile::Profile;
pub use ris::{amplitude_model, ris_config_from_phases, RisConfig};
