//! End-to-end sample synthesis (channel -> pilots -> features -> labels),
//! deterministic splitting, and on-disk persistence.
//!
//! Layout on disk: `meta.json` plus three flat little-endian binaries, each
//! behind a 6-byte magic and u16 version:
//!   - `features.f32le`: sample-major then step-major f32 features,
//!   - `labels.u8`: one byte per (sample, codeword) — 0 negative, 1
//!     near-optimal, 2 best (the best is always near-optimal),
//!   - `rates.f32le` (optional): per-codeword rates for audit.
//! The best index is the smallest argmax of the stored f32 rates, so a
//! saved dataset reloads bit-identically.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{argmax, exhaustive_search};
use crate::channel::sample_channels;
use crate::codebook::{build_codebook, Codebook, CodebookKind};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};
use crate::neural::BatchSource;
use crate::pilots::{feature_scale, generate_pilots, preprocess_features, uplink_receive, FeatureMode};
use crate::ris::{ReferenceKind, RisConfig};
use crate::rng::stream;

pub const DATASET_FORMAT: &str = "risbeam-dataset";
pub const DATASET_VERSION: u16 = 1;
pub const FEATURES_MAGIC: &[u8; 6] = b"RBFEA\0";
pub const LABELS_MAGIC: &[u8; 6] = b"RBLBL\0";
pub const RATES_MAGIC: &[u8; 6] = b"RBRAT\0";

/// Train/validation/test sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Dataset descriptor persisted as `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub version: u16,
    pub system: SystemConfig,
    pub codebook_kind: CodebookKind,
    pub feature_mode: FeatureMode,
    /// Pilot steps per sample (K).
    pub steps: usize,
    /// Feature width per step (D).
    pub feature_dim: usize,
    /// Codebook size (Q).
    pub outputs: usize,
    pub count: usize,
    pub counts: SplitCounts,
    pub label_power_dbm: f64,
    /// Uplink pilot power; defaults to the label power.
    pub pilot_power_dbm: f64,
    pub reference: ReferenceKind,
    /// Multiplier applied to raw features before storage (noise-unit
    /// normalization).
    pub feature_scale: f64,
    pub has_rates: bool,
    pub seed: u64,
}

/// In-memory dataset; all samples share one flat feature/label store.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub features: Vec<f32>,
    pub labels: Vec<u8>,
    pub rates: Option<Vec<f32>>,
}

/// Borrowed contiguous slice of a dataset.
#[derive(Debug, Clone, Copy)]
pub struct DatasetView<'a> {
    pub features: &'a [f32],
    pub labels: &'a [u8],
    pub rates: Option<&'a [f32]>,
    pub steps: usize,
    pub feature_dim: usize,
    pub outputs: usize,
    pub count: usize,
}

impl<'a> DatasetView<'a> {
    pub fn batch_source(&self) -> BatchSource<'a> {
        BatchSource {
            features: self.features,
            labels: self.labels,
            steps: self.steps,
            dim: self.feature_dim,
            outputs: self.outputs,
            count: self.count,
        }
    }

    /// Best codeword index of sample `i` (the byte marked 2).
    pub fn best_index(&self, i: usize) -> usize {
        let base = i * self.outputs;
        for q in 0..self.outputs {
            if self.labels[base + q] == 2 {
                return q;
            }
        }
        // fall back to the first near-optimal mark (rates dropped on export)
        (0..self.outputs)
            .find(|&q| self.labels[base + q] != 0)
            .expect("label sets are never empty")
    }

    pub fn label_row(&self, i: usize) -> &'a [u8] {
        &self.labels[i * self.outputs..(i + 1) * self.outputs]
    }
}

fn split_counts(count: usize, fractions: (f64, f64, f64)) -> Result<SplitCounts> {
    let (ft, fv, fs) = fractions;
    if ft <= 0.0 || fv <= 0.0 || fs <= 0.0 || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions must be positive and sum to 1, got ({ft}, {fv}, {fs})"
        )));
    }
    let val = (count as f64 * fv).floor() as usize;
    let test = (count as f64 * fs).floor() as usize;
    let train = count - val - test;
    Ok(SplitCounts { train, val, test })
}

/// One generated sample, produced entirely from streams derived from
/// `(seed, index)`.
pub fn generate_sample(
    cfg: &SystemConfig,
    codebook: &Codebook,
    reference: &RisConfig,
    mode: FeatureMode,
    label_power_dbm: f64,
    pilot_power_dbm: f64,
    index: u64,
) -> Result<(Vec<f32>, Vec<u8>, Vec<f32>)> {
    let seed = cfg.seed;
    let p = dbm_to_watts(label_power_dbm);
    let p_ul = dbm_to_watts(pilot_power_dbm);
    let noise = cfg.noise_watts();

    let ch = sample_channels(cfg, &mut stream(seed, "chan", index));
    let pilots = generate_pilots(cfg, p_ul, &mut stream(seed, "pilot", index));
    let received = uplink_receive(&ch, reference, &pilots, noise, &mut stream(seed, "noise", index))?;
    let feats = preprocess_features(&received, reference, mode);
    let scale = feature_scale(cfg);

    let mut features = Vec::with_capacity(feats.n_steps() * feats.dim());
    for step in &feats.steps {
        features.extend(step.iter().map(|&v| (v * scale) as f32));
    }

    let outcome = exhaustive_search(&ch, codebook, p, noise)?;
    let rates: Vec<f32> = outcome.rates.iter().map(|&r| r as f32).collect();
    let mut labels: Vec<u8> = outcome.label_set.iter().map(|&b| u8::from(b)).collect();
    let best = argmax(&rates.iter().map(|&r| f64::from(r)).collect::<Vec<_>>());
    labels[best] = 2;
    Ok((features, labels, rates))
}

/// Generates `count` samples. Each sample draws from its own RNG streams, so
/// the rayon-parallel fill below is bit-identical to a serial loop.
pub fn generate_dataset(
    cfg: &SystemConfig,
    count: usize,
    label_power_dbm: f64,
    mode: FeatureMode,
    ideal_codebook: bool,
) -> Result<Dataset> {
    generate_dataset_with(
        cfg,
        count,
        label_power_dbm,
        label_power_dbm,
        ReferenceKind::ZeroPhase,
        mode,
        ideal_codebook,
    )
}

/// Full-control variant: independent pilot power and reference state.
pub fn generate_dataset_with(
    cfg: &SystemConfig,
    count: usize,
    label_power_dbm: f64,
    pilot_power_dbm: f64,
    reference_kind: ReferenceKind,
    mode: FeatureMode,
    ideal_codebook: bool,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    cfg.validate()?;
    let codebook = build_codebook(cfg, ideal_codebook)?;
    let reference = RisConfig::reference_of_kind(cfg, reference_kind);
    let steps = cfg.pilot_len;
    let dim = mode.dim(cfg.n_tx, cfg.n_ris);
    let outputs = codebook.len();

    let mut features = vec![0.0f32; count * steps * dim];
    let mut labels = vec![0u8; count * outputs];
    let mut rates = vec![0.0f32; count * outputs];

    features
        .par_chunks_mut(steps * dim)
        .zip(labels.par_chunks_mut(outputs))
        .zip(rates.par_chunks_mut(outputs))
        .enumerate()
        .try_for_each(|(i, ((fslot, lslot), rslot))| -> Result<()> {
            let (f, l, r) = generate_sample(
                cfg,
                &codebook,
                &reference,
                mode,
                label_power_dbm,
                pilot_power_dbm,
                i as u64,
            )?;
            fslot.copy_from_slice(&f);
            lslot.copy_from_slice(&l);
            rslot.copy_from_slice(&r);
            Ok(())
        })?;

    let meta = DatasetMeta {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        system: cfg.clone(),
        codebook_kind: codebook.kind,
        feature_mode: mode,
        steps,
        feature_dim: dim,
        outputs,
        count,
        counts: split_counts(count, (0.8, 0.1, 0.1)).unwrap_or(SplitCounts {
            train: count,
            val: 0,
            test: 0,
        }),
        label_power_dbm,
        pilot_power_dbm,
        reference: reference_kind,
        feature_scale: feature_scale(cfg),
        has_rates: true,
        seed: cfg.seed,
    };
    Ok(Dataset {
        meta,
        features,
        labels,
        rates: Some(rates),
    })
}

impl Dataset {
    pub fn view(&self) -> DatasetView<'_> {
        DatasetView {
            features: &self.features,
            labels: &self.labels,
            rates: self.rates.as_deref(),
            steps: self.meta.steps,
            feature_dim: self.meta.feature_dim,
            outputs: self.meta.outputs,
            count: self.meta.count,
        }
    }

    /// Order-preserving contiguous partition; fractional sizes round down
    /// for validation and test, remainder to train.
    pub fn split(&self, fractions: (f64, f64, f64)) -> Result<(DatasetView<'_>, DatasetView<'_>, DatasetView<'_>)> {
        let counts = split_counts(self.meta.count, fractions)?;
        let cut = |lo: usize, n: usize| DatasetView {
            features: &self.features[lo * self.meta.steps * self.meta.feature_dim
                ..(lo + n) * self.meta.steps * self.meta.feature_dim],
            labels: &self.labels[lo * self.meta.outputs..(lo + n) * self.meta.outputs],
            rates: self
                .rates
                .as_deref()
                .map(|r| &r[lo * self.meta.outputs..(lo + n) * self.meta.outputs]),
            steps: self.meta.steps,
            feature_dim: self.meta.feature_dim,
            outputs: self.meta.outputs,
            count: n,
        };
        let train = cut(0, counts.train);
        let val = cut(counts.train, counts.val);
        let test = cut(counts.train + counts.val, counts.test);
        Ok((train, val, test))
    }

    /// Average near-optimal set size across samples.
    pub fn mean_label_count(&self) -> f64 {
        let marked = self.labels.iter().filter(|&&b| b != 0).count();
        marked as f64 / self.meta.count as f64
    }

    /// Drops the per-codeword audit rates (smaller files; the best index
    /// stays encoded in the label bytes).
    pub fn without_rates(mut self) -> Dataset {
        self.rates = None;
        self.meta.has_rates = false;
        self
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)?)?;

        write_binary(&dir.join("features.f32le"), FEATURES_MAGIC, |w| {
            for v in &self.features {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        })?;
        write_binary(&dir.join("labels.u8"), LABELS_MAGIC, |w| {
            w.write_all(&self.labels)?;
            Ok(())
        })?;
        if let Some(rates) = &self.rates {
            write_binary(&dir.join("rates.f32le"), RATES_MAGIC, |w| {
                for v in rates {
                    w.write_all(&v.to_le_bytes())?;
                }
                Ok(())
            })?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let meta_path = dir.join("meta.json");
        let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
        if meta.format != DATASET_FORMAT {
            return Err(Error::Format {
                path: meta_path.display().to_string(),
            });
        }
        if meta.version != DATASET_VERSION {
            return Err(Error::Version {
                path: meta_path.display().to_string(),
                found: meta.version,
                expected: DATASET_VERSION,
            });
        }
        meta.system.validate()?;

        let feature_bytes = read_binary(&dir.join("features.f32le"), FEATURES_MAGIC)?;
        let expected = meta.count * meta.steps * meta.feature_dim * 4;
        if feature_bytes.len() != expected {
            return Err(Error::Truncated {
                path: dir.join("features.f32le").display().to_string(),
                expected,
                found: feature_bytes.len(),
            });
        }
        let features: Vec<f32> = feature_bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
            .collect();

        let labels = read_binary(&dir.join("labels.u8"), LABELS_MAGIC)?;
        if labels.len() != meta.count * meta.outputs {
            return Err(Error::Truncated {
                path: dir.join("labels.u8").display().to_string(),
                expected: meta.count * meta.outputs,
                found: labels.len(),
            });
        }

        let rates_path = dir.join("rates.f32le");
        let rates = if meta.has_rates {
            let bytes = read_binary(&rates_path, RATES_MAGIC)?;
            let expected = meta.count * meta.outputs * 4;
            if bytes.len() != expected {
                return Err(Error::Truncated {
                    path: rates_path.display().to_string(),
                    expected,
                    found: bytes.len(),
                });
            }
            Some(
                bytes
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
                    .collect(),
            )
        } else {
            if rates_path.exists() {
                return Err(Error::Inconsistent(
                    "rates.f32le present but meta declares has_rates = false".into(),
                ));
            }
            None
        };

        let dataset = Dataset {
            meta,
            features,
            labels,
            rates,
        };
        dataset.validate_labels()?;
        Ok(dataset)
    }

    fn validate_labels(&self) -> Result<()> {
        for i in 0..self.meta.count {
            let row = &self.labels[i * self.meta.outputs..(i + 1) * self.meta.outputs];
            let bests = row.iter().filter(|&&b| b == 2).count();
            let marked = row.iter().filter(|&&b| b != 0).count();
            if marked == 0 || bests != 1 {
                return Err(Error::Inconsistent(format!(
                    "sample {i}: {marked} marks, {bests} best flags"
                )));
            }
            if row.iter().any(|&b| b > 2) {
                return Err(Error::Inconsistent(format!(
                    "sample {i}: label byte out of range"
                )));
            }
        }
        Ok(())
    }
}

fn write_binary(
    path: &Path,
    magic: &[u8; 6],
    payload: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(magic)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    payload(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_binary(path: &Path, magic: &[u8; 6]) -> Result<Vec<u8>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut head = [0u8; 8];
    f.read_exact(&mut head).map_err(|_| Error::Format {
        path: path.display().to_string(),
    })?;
    if &head[..6] != magic {
        return Err(Error::Format {
            path: path.display().to_string(),
        });
    }
    let version = u16::from_le_bytes(head[6..8].try_into().expect("two bytes"));
    if version != DATASET_VERSION {
        return Err(Error::Version {
            path: path.display().to_string(),
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    Ok(payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::desk_scale();
        cfg.seed = 71;
        cfg
    }

    #[test]
    fn labels_contain_best_index() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 6, 40.0, FeatureMode::KronEven, false).unwrap();
        let view = ds.view();
        for i in 0..6 {
            let best = view.best_index(i);
            assert_eq!(view.label_row(i)[best], 2);
            assert!(view.label_row(i).iter().filter(|&&b| b != 0).count() >= 1);
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = small_cfg();
        let a = generate_dataset(&cfg, 5, 40.0, FeatureMode::KronEven, false).unwrap();
        let b = generate_dataset(&cfg, 5, 40.0, FeatureMode::KronEven, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_fill_matches_per_sample_generation() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 8, 40.0, FeatureMode::KronEven, false).unwrap();
        let codebook = build_codebook(&cfg, false).unwrap();
        let reference = RisConfig::reference(&cfg);
        for i in 0..8usize {
            let (f, l, r) = generate_sample(
                &cfg,
                &codebook,
                &reference,
                FeatureMode::KronEven,
                40.0,
                40.0,
                i as u64,
            )
            .unwrap();
            let fd = ds.meta.steps * ds.meta.feature_dim;
            assert_eq!(&ds.features[i * fd..(i + 1) * fd], &f[..]);
            assert_eq!(
                &ds.labels[i * ds.meta.outputs..(i + 1) * ds.meta.outputs],
                &l[..]
            );
            let rates = ds.rates.as_ref().unwrap();
            assert_eq!(&rates[i * ds.meta.outputs..(i + 1) * ds.meta.outputs], &r[..]);
        }
    }

    #[test]
    fn feature_dim_matches_mode() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 2, 40.0, FeatureMode::Raw, false).unwrap();
        assert_eq!(ds.meta.feature_dim, 2 * cfg.n_tx);
        let ds2 = generate_dataset(&cfg, 2, 40.0, FeatureMode::KronEven, false).unwrap();
        assert_eq!(ds2.meta.feature_dim, 2 * cfg.n_tx * cfg.n_ris.div_ceil(2));
    }

    #[test]
    fn split_sizes_and_partition() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 10, 40.0, FeatureMode::Raw, false).unwrap();
        let (train, val, test) = ds.split((0.8, 0.1, 0.1)).unwrap();
        assert_eq!((train.count, val.count, test.count), (8, 1, 1));
        let total_features = train.features.len() + val.features.len() + test.features.len();
        assert_eq!(total_features, ds.features.len());
        // contiguity: concatenation reproduces the original buffer
        let mut joined = Vec::new();
        joined.extend_from_slice(train.features);
        joined.extend_from_slice(val.features);
        joined.extend_from_slice(test.features);
        assert_eq!(joined, ds.features);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 4, 40.0, FeatureMode::Raw, false).unwrap();
        assert!(ds.split((0.5, 0.2, 0.2)).is_err());
        assert!(ds.split((1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 12, 40.0, FeatureMode::KronEven, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn round_trip_without_rates() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 4, 40.0, FeatureMode::Raw, false)
            .unwrap()
            .without_rates();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn corrupted_magic_is_format_error() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 3, 40.0, FeatureMode::Raw, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let path = dir.path().join("features.f32le");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[2] ^= 0x55;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(Dataset::load(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_version_is_version_error() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 3, 40.0, FeatureMode::Raw, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let path = dir.path().join("labels.u8");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[6] = 9;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(Dataset::load(dir.path()), Err(Error::Version { .. })));
    }

    #[test]
    fn meta_payload_mismatch_is_detected() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 3, 40.0, FeatureMode::Raw, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let meta_path = dir.path().join("meta.json");
        let mut meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
        meta["count"] = serde_json::json!(5);
        std::fs::write(&meta_path, meta.to_string()).unwrap();
        assert!(matches!(
            Dataset::load(dir.path()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 3, 40.0, FeatureMode::Raw, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let path = dir.path().join("rates.f32le");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Dataset::load(dir.path()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn multi_label_sets_exceed_one_on_average() {
        let cfg = small_cfg();
        let ds = generate_dataset(&cfg, 300, 40.0, FeatureMode::Raw, false).unwrap();
        let mean = ds.mean_label_count();
        assert!(mean > 1.0, "mean near-optimal set size {mean}");
    }
}
