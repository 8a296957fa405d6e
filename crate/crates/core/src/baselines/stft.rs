use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub window: Window,
    /// Pad `n_fft / 2` zeros on both sides so frame `t` is centred on sample `t·hop`.
    pub center: bool,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { n_fft: 512, hop: 256, window: Window::Hann, center: true }
    }
}

impl StftConfig {
    /// 256-sample Hann, 50 % overlap; used for decay reliefs.
    pub fn edr_default() -> Self {
        Self { n_fft: 256, hop: 128, window: Window::Hann, center: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 2 || self.hop == 0 {
            return Err(Error::Config(format!("n_fft ({}) must be ≥ 2 and hop ({}) > 0", self.n_fft, self.hop)));
        }
        if self.n_fft % self.hop != 0 {
            return Err(Error::Config(format!("hop {} must divide n_fft {}", self.hop, self.n_fft)));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    fn pad(&self) -> usize {
        if self.center {
            self.n_fft / 2
        } else {
            0
        }
    }
}

/// One-sided spectrogram, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub n_fft: usize,
    pub frames: Vec<Vec<Complex64>>,
}

impl Spectrogram {
    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.frames[frame][bin]
    }

    /// `Σ_k c_k |X_k|²` per frame, with `c = 1` at DC/Nyquist and 2 elsewhere,
    /// which equals `n_fft · Σ |w·x|²` over the frame.
    pub fn frame_energy(&self, frame: usize) -> f64 {
        let last = self.bins() - 1;
        self.frames[frame]
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let weight = if k == 0 || (k == last && self.n_fft % 2 == 0) { 1.0 } else { 2.0 };
                weight * c.norm_sqr()
            })
            .sum()
    }
}

pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    /// Real inverse of a one-sided spectrum of length `n/2 + 1`.
    pub fn inverse_real(&self, half: &[Complex64], n: usize) -> Vec<f64> {
        let mut full = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            full[k] = if k < half.len() { half[k] } else { half[n - k].conj() };
        }
        // DC and Nyquist of a real signal are real
        full[0].im = 0.0;
        if n % 2 == 0 {
            full[n / 2].im = 0.0;
        }
        self.inverse.process(&mut full);
        let scale = 1.0 / n as f64;
        full.iter().map(|c| c.re * scale).collect()
    }
}

fn frame_count(padded_len: usize, cfg: &StftConfig) -> usize {
    if padded_len <= cfg.n_fft {
        1
    } else {
        (padded_len - cfg.n_fft).div_ceil(cfg.hop) + 1
    }
}

/// Windowed short-time DFT. Each frame's phase is referenced to its first sample.
pub fn stft(x: &[f64], cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let pad = cfg.pad();
    if x.len() + 2 * pad < cfg.n_fft {
        return Err(invalid(format!("signal of {} samples is shorter than one {}-sample frame", x.len(), cfg.n_fft)));
    }
    let n_frames = frame_count(x.len() + 2 * pad, cfg);
    let total = (n_frames - 1) * cfg.hop + cfg.n_fft;
    let mut padded = vec![0.0; total];
    padded[pad..pad + x.len()].copy_from_slice(x);

    let window = cfg.window.coefficients(cfg.n_fft);
    let fft = FftPair::new(cfg.n_fft);
    let bins = cfg.bins();
    let frames = (0..n_frames)
        .map(|t| {
            let start = t * cfg.hop;
            let mut buf: Vec<Complex64> = padded[start..start + cfg.n_fft]
                .iter()
                .zip(&window)
                .map(|(v, w)| Complex64::new(v * w, 0.0))
                .collect();
            fft.forward.process(&mut buf);
            buf.truncate(bins);
            buf
        })
        .collect();
    Ok(Spectrogram { n_fft: cfg.n_fft, frames })
}

/// Overlap-add synthesis normalized by the summed analysis window, returning
/// `length` samples. Samples with no window coverage are zero.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig, length: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    if spec.n_fft != cfg.n_fft {
        return Err(invalid(format!("spectrogram n_fft {} does not match config {}", spec.n_fft, cfg.n_fft)));
    }
    let pad = cfg.pad();
    let n = cfg.n_fft;
    let total = (spec.n_frames().max(1) - 1) * cfg.hop + n;
    let window = cfg.window.coefficients(n);
    let fft = FftPair::new(n);
    let mut out = vec![0.0; total];
    let mut norm = vec![0.0; total];
    for (t, frame) in spec.frames.iter().enumerate() {
        let start = t * cfg.hop;
        let time = fft.inverse_real(frame, n);
        for i in 0..n {
            out[start + i] += time[i];
            norm[start + i] += window[i];
        }
    }
    let peak = norm.iter().copied().fold(0.0, f64::max);
    let floor = 1e-8 * peak;
    Ok((0..length)
        .map(|i| {
            let j = i + pad;
            if j < total && norm[j] > floor {
                out[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(StftConfig::default().validate().is_ok());
        let bad = StftConfig { hop: 200, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(stft(&[0.0; 10], &StftConfig { center: false, ..Default::default() }).is_err());
    }

    #[test]
    fn hann_is_cola_at_half_overlap() {
        let w = Window::Hann.coefficients(16);
        for i in 0..8 {
            assert!((w[i] + w[i + 8] - 1.0).abs() < 1e-15);
        }
    }
}
