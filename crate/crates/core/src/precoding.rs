//! SVD precoder selection and spectral-efficiency evaluation.
//!
//! Two independent rate routes are kept deliberately: the singular-value sum
//! and the determinant of the precoded Gram matrix. With the SVD precoder
//! they must agree to numerical precision, which the tests exploit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ris::C64;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Output of [`svd_precoder`]: the right-singular-vector precoder, the
/// retained singular values in descending order, and the stream count.
#[derive(Debug, Clone)]
pub struct PrecodingResult {
    /// `n_tx x n_streams`, orthonormal columns.
    pub precoder: DMatrix<C64>,
    /// Descending, strictly positive.
    pub singulars: Vec<f64>,
    pub n_streams: usize,
    /// Filled by callers that evaluate a rate for this precoder.
    pub rate_bps_hz: Option<f64>,
}

/// Computes the SVD precoder for an effective channel.
///
/// The stream count is the numerical rank: singular values above
/// `rel_tol * tau_1` are kept. An all-zero channel yields zero streams and an
/// empty precoder.
pub fn svd_precoder(h_eff: &DMatrix<C64>, rel_tol: f64) -> Result<PrecodingResult> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must lie in (0, 1), got {rel_tol}"
        )));
    }
    if h_eff.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "effective channel contains non-finite entries".into(),
        ));
    }
    let n_tx = h_eff.ncols();
    let svd = h_eff.clone().svd(false, true);
    let v_t = svd
        .v_t
        .expect("svd requested right singular vectors");
    let sigma = svd.singular_values;

    let tau1 = sigma.iter().cloned().fold(0.0f64, f64::max);
    let n_streams = if tau1 == 0.0 {
        0
    } else {
        sigma.iter().filter(|&&s| s > rel_tol * tau1).count()
    };

    let mut precoder = DMatrix::<C64>::zeros(n_tx, n_streams);
    for s in 0..n_streams {
        for c in 0..n_tx {
            // rows of V^H are conjugated right singular vectors
            precoder[(c, s)] = v_t[(s, c)].conj();
        }
    }
    Ok(PrecodingResult {
        precoder,
        singulars: sigma.iter().take(n_streams).cloned().collect(),
        n_streams,
        rate_bps_hz: None,
    })
}

/// Achievable rate from singular values with equal power split:
/// `sum_c log2(1 + P/(noise * n_streams) * tau_c^2)` in bit/s/Hz.
///
/// Zero streams (degenerate channel) yield rate 0.
pub fn spectral_efficiency(
    singulars: &[f64],
    p_watts: f64,
    noise_watts: f64,
    n_streams: usize,
) -> f64 {
    if n_streams == 0 {
        return 0.0;
    }
    debug_assert_eq!(singulars.len(), n_streams);
    let gamma = p_watts / (noise_watts * n_streams as f64);
    singulars
        .iter()
        .map(|&tau| (1.0 + gamma * tau * tau).log2())
        .sum()
}

/// Determinant-form rate `log2 det(I_{N_s} + P/(noise N_s) F^H H^H H F)`,
/// the independent cross-check for [`spectral_efficiency`].
pub fn spectral_efficiency_det(
    h_eff: &DMatrix<C64>,
    precoder: &DMatrix<C64>,
    p_watts: f64,
    noise_watts: f64,
    n_streams: usize,
) -> Result<f64> {
    if n_streams == 0 {
        return Ok(0.0);
    }
    if precoder.nrows() != h_eff.ncols() || precoder.ncols() != n_streams {
        return Err(Error::DimensionMismatch(format!(
            "precoder {}x{} vs channel {}x{} with {} streams",
            precoder.nrows(),
            precoder.ncols(),
            h_eff.nrows(),
            h_eff.ncols(),
            n_streams
        )));
    }
    let gamma = p_watts / (noise_watts * n_streams as f64);
    let hf = h_eff * precoder; // n_rx x n_streams
    let gram = hf.adjoint() * &hf; // n_streams x n_streams, Hermitian PSD
    let mut m = DMatrix::<C64>::identity(n_streams, n_streams);
    m += gram.map(|c| c * gamma);
    let det = m.determinant();
    // determinant of I + PSD is real and >= 1 up to rounding
    Ok(det.re.max(1.0).log2())
}
