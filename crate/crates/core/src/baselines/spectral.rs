use num_complex::Complex64;

use super::stft::{stft, FftPair, StftConfig};
use super::{common_length, DeconvolutionDiagnostics};
use crate::error::{invalid, Result};

/// Relative Tikhonov floor added to `|S|²` in each ratio.
pub const RATIO_FLOOR: f64 = 1e-10;

/// Per-bin ratio `Y·S* / (|S|² + ε)`, averaged over frames with weights
/// `|S|²`, then brought back to the time domain and truncated to `rir_len`.
pub fn spectral_deconvolution(y: &[f64], s: &[f64], rir_len: usize, cfg: &StftConfig) -> Result<Vec<f64>> {
    spectral_deconvolution_with_diagnostics(y, s, rir_len, cfg).map(|(h, _)| h)
}

pub fn spectral_deconvolution_with_diagnostics(
    y: &[f64],
    s: &[f64],
    rir_len: usize,
    cfg: &StftConfig,
) -> Result<(Vec<f64>, DeconvolutionDiagnostics)> {
    cfg.validate()?;
    if rir_len == 0 {
        return Err(invalid("response length must be positive"));
    }
    if s.iter().all(|v| *v == 0.0) {
        return Err(invalid("source signal is identically zero"));
    }
    let (y, s) = common_length(y, s);
    let ys = stft(&y, cfg)?;
    let ss = stft(&s, cfg)?;

    let max_power = ss.frames.iter().flatten().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let floor = RATIO_FLOOR * max_power;
    let mut diagnostics = DeconvolutionDiagnostics::default();

    let response: Vec<Complex64> = (0..cfg.bins())
        .map(|bin| {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            let mut usable = false;
            for t in 0..ss.n_frames() {
                let sv = ss.get(bin, t);
                let power = sv.norm_sqr();
                usable |= power > floor;
                let ratio = ys.get(bin, t) * sv.conj() / (power + floor);
                num += ratio * power;
                den += power;
            }
            if !usable || den == 0.0 {
                diagnostics.zeroed_bins += 1;
                Complex64::new(0.0, 0.0)
            } else {
                num / den
            }
        })
        .collect();

    let impulse = FftPair::new(cfg.n_fft).inverse_real(&response, cfg.n_fft);
    let mut h = vec![0.0; rir_len];
    let n = rir_len.min(cfg.n_fft);
    h[..n].copy_from_slice(&impulse[..n]);
    Ok((h, diagnostics))
}
