//! Classical STFT-domain deconvolution baselines.
//!
//! * [`spectral_deconvolution`] divides the observation spectrum by the
//!   source spectrum bin by bin and averages the ratios over frames.
//! * [`crossband_deconvolution`] identifies per-bin multi-tap STFT filters
//!   (optionally with couplings to neighbouring bins) by least squares.

mod crossband;
mod spectral;
mod stft;

pub use crossband::{crossband_deconvolution, crossband_deconvolution_with_diagnostics, identify_band_filters, BandFilters};
pub use spectral::{spectral_deconvolution, spectral_deconvolution_with_diagnostics};
pub use stft::{istft, stft, Spectrogram, StftConfig, Window};

use serde::{Deserialize, Serialize};

/// Bookkeeping for bins that could not be estimated normally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeconvolutionDiagnostics {
    /// Bins with no usable source energy, set to zero.
    pub zeroed_bins: usize,
    /// Times the ridge had to be increased for a bin.
    pub ridge_escalations: usize,
}

/// Align source and observation on a common length.
pub(crate) fn common_length(y: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len().max(s.len());
    let mut yy = y.to_vec();
    yy.resize(n, 0.0);
    let mut ss = s.to_vec();
    ss.resize(n, 0.0);
    (yy, ss)
}
