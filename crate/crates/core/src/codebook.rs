//! Kronecker DFT codebook over quantized azimuth/elevation angles, plus the
//! hardware-adjusted variant with phase-dependent amplitudes.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::steering_vector;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ris::{amplitude_model, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Ideal,
    Practical,
}

/// Ordered list of candidate RIS response vectors.
///
/// Word `q = (i-1) * n_v + (j-1)` pairs azimuth index `i` with elevation
/// index `j` (azimuth-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub words: Vec<DVector<C64>>,
    pub kind: CodebookKind,
    pub n_h: usize,
    pub n_v: usize,
}

/// Quantized steering angles: `theta_{h,i} = (i-1) * 2pi/n_h` and likewise
/// for the vertical dimension.
pub fn quantized_angles(n_h: usize, n_v: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_h == 0 || n_v == 0 {
        return Err(Error::InvalidArgument(
            "codebook dimensions must be >= 1".into(),
        ));
    }
    let tau = std::f64::consts::TAU;
    let az = (0..n_h).map(|i| i as f64 * tau / n_h as f64).collect();
    let el = (0..n_v).map(|j| j as f64 * tau / n_v as f64).collect();
    Ok((az, el))
}

/// Builds the ideal codebook: word (i, j) is
/// `a_{N_h}(theta_{h,i}) (x) a_{N_v}(theta_{v,j})`, unit-modulus entries.
pub fn build_ideal_codebook(n_h: usize, n_v: usize) -> Result<Codebook> {
    let (az, el) = quantized_angles(n_h, n_v)?;
    let mut words = Vec::with_capacity(n_h * n_v);
    for &th in &az {
        let a_h = steering_vector(n_h, th)?;
        for &tv in &el {
            let a_v = steering_vector(n_v, tv)?;
            let mut word = DVector::zeros(n_h * n_v);
            for (i, &hi) in a_h.iter().enumerate() {
                for (j, &vj) in a_v.iter().enumerate() {
                    word[i * n_v + j] = hi * vj;
                }
            }
            words.push(word);
        }
    }
    Ok(Codebook {
        words,
        kind: CodebookKind::Ideal,
        n_h,
        n_v,
    })
}

/// Scales every entry of every word by the hardware amplitude at its phase.
/// Phases are preserved; word count is preserved.
pub fn apply_hardware_model(cb: &Codebook, cfg: &SystemConfig) -> Result<Codebook> {
    if cb.kind != CodebookKind::Ideal {
        return Err(Error::InvalidState(
            "hardware model already applied to this codebook".into(),
        ));
    }
    let words = cb
        .words
        .iter()
        .map(|w| w.map(|c| c * amplitude_model(c.arg(), cfg)))
        .collect();
    Ok(Codebook {
        words,
        kind: CodebookKind::Practical,
        n_h: cb.n_h,
        n_v: cb.n_v,
    })
}

/// Builds the codebook the evaluation pipeline uses for a config:
/// ideal Kronecker DFT, then hardware adjustment unless `ideal` is set.
pub fn build_codebook(cfg: &SystemConfig, ideal: bool) -> Result<Codebook> {
    let cb = build_ideal_codebook(cfg.n_h, cfg.n_v)?;
    if ideal {
        Ok(cb)
    } else {
        apply_hardware_model(&cb, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookMeta {
    pub format: String,
    pub kind: CodebookKind,
    pub n_h: usize,
    pub n_v: usize,
    pub words: usize,
    pub elements: usize,
}

pub const CODEBOOK_BIN_MAGIC: &[u8; 6] = b"RBCBK\0";
pub const CODEBOOK_BIN_VERSION: u16 = 1;

impl Codebook {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Audit export: `<stem>.json` metadata plus `<stem>.bin` holding
    /// word-major interleaved (re, im) f64 little-endian entries behind a
    /// 6-byte magic and u16 version.
    pub fn export(&self, stem: &Path) -> Result<()> {
        let meta = CodebookMeta {
            format: "risbeam-codebook-v1".into(),
            kind: self.kind,
            n_h: self.n_h,
            n_v: self.n_v,
            words: self.len(),
            elements: self.n_elements(),
        };
        let json_path = stem.with_extension("json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&meta)?)?;

        let bin_path = stem.with_extension("bin");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&bin_path)?);
        file.write_all(CODEBOOK_BIN_MAGIC)?;
        file.write_all(&CODEBOOK_BIN_VERSION.to_le_bytes())?;
        for word in &self.words {
            for c in word.iter() {
                file.write_all(&c.re.to_le_bytes())?;
                file.write_all(&c.im.to_le_bytes())?;
            }
        }
        file.flush()?;
        Ok(())
    }
}
