use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::stft::{stft, FftPair, Spectrogram, StftConfig};
use super::{common_length, DeconvolutionDiagnostics};
use crate::error::{invalid, Result};

const MAX_RIDGE_ESCALATIONS: usize = 3;

/// Identified STFT-domain filters.
///
/// `coefficients[f]` holds, for every source bin `f'` in
/// `band_members(f)` (in order) and every delay `τ < taps`, the coefficient
/// at index `member * taps + τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFilters {
    pub taps: usize,
    pub bands: usize,
    pub bins: usize,
    pub coefficients: Vec<Vec<Complex64>>,
}

impl BandFilters {
    /// Source bins feeding output bin `f`: `f` itself plus `bands - 1`
    /// neighbours on each side.
    pub fn band_members(&self, f: usize) -> Vec<usize> {
        band_members(f, self.bands, self.bins)
    }

    /// Band-to-band (main diagonal) coefficient at delay `tau`.
    pub fn main(&self, f: usize, tau: usize) -> Complex64 {
        let member = self.band_members(f).iter().position(|&m| m == f).expect("bin is its own member");
        self.coefficients[f][member * self.taps + tau]
    }
}

fn band_members(f: usize, bands: usize, bins: usize) -> Vec<usize> {
    let reach = bands.saturating_sub(1);
    (f.saturating_sub(reach)..=(f + reach).min(bins - 1)).collect()
}

/// Solve, for every bin, `Y[f,t] ≈ Σ_{f'} Σ_τ H[f,f',τ]·S[f',t-τ]` by
/// ridge-regularized least squares over frames. `ridge` is relative to the
/// mean diagonal of the normal matrix.
pub fn identify_band_filters(
    ys: &Spectrogram,
    ss: &Spectrogram,
    taps: usize,
    bands: usize,
    ridge: f64,
) -> Result<(BandFilters, DeconvolutionDiagnostics)> {
    if ys.n_fft != ss.n_fft || ys.n_frames() != ss.n_frames() {
        return Err(invalid("observation and source spectrograms differ in shape"));
    }
    if taps == 0 || bands == 0 {
        return Err(invalid("taps and bands must be positive"));
    }
    if !(ridge >= 0.0) {
        return Err(invalid(format!("ridge must be ≥ 0, got {ridge}")));
    }
    let bins = ss.bins();
    let widest = (2 * bands - 1).min(bins);
    let frames = ss.n_frames();
    if frames < taps * widest * 2 {
        return Err(invalid(format!(
            "{frames} frames cannot overdetermine {taps} taps × {widest} bands (need {})",
            taps * widest * 2
        )));
    }

    let solved: Vec<(Vec<Complex64>, usize, bool)> = (0..bins)
        .into_par_iter()
        .map(|f| {
            let members = band_members(f, bands, bins);
            let n = members.len() * taps;
            let a = DMatrix::from_fn(frames, n, |t, col| {
                let (member, tau) = (col / taps, col % taps);
                if t >= tau {
                    ss.get(members[member], t - tau)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let b = DVector::from_fn(frames, |t, _| ys.get(f, t));
            solve_ridge(&a, &b, ridge)
        })
        .collect();

    let mut diagnostics = DeconvolutionDiagnostics::default();
    let mut coefficients = Vec::with_capacity(bins);
    for (f, (x, escalations, ok)) in solved.into_iter().enumerate() {
        diagnostics.ridge_escalations += escalations;
        if !ok {
            warn!("cross-band system for bin {f} is rank deficient; bin set to zero");
            diagnostics.zeroed_bins += 1;
        }
        coefficients.push(x);
    }
    Ok((BandFilters { taps, bands, bins, coefficients }, diagnostics))
}

/// Returns the solution, the number of ridge escalations and whether a
/// solution was found at all (otherwise zeros).
fn solve_ridge(a: &DMatrix<Complex64>, b: &DVector<Complex64>, ridge: f64) -> (Vec<Complex64>, usize, bool) {
    let n = a.ncols();
    let ah = a.adjoint();
    let normal = &ah * a;
    let rhs = &ah * b;
    let scale = (0..n).map(|i| normal[(i, i)].re).sum::<f64>() / n as f64;
    if !(scale > 0.0) {
        return (vec![Complex64::new(0.0, 0.0); n], 0, false);
    }
    let mut lambda = ridge * scale;
    for escalation in 0..=MAX_RIDGE_ESCALATIONS {
        let mut m = normal.clone();
        for i in 0..n {
            m[(i, i)] += Complex64::new(lambda, 0.0);
        }
        if let Some(chol) = m.cholesky() {
            let x = chol.solve(&rhs);
            if x.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                return (x.iter().copied().collect(), escalation, true);
            }
        }
        lambda = if lambda > 0.0 { lambda * 10.0 } else { 1e-12 * scale };
    }
    (vec![Complex64::new(0.0, 0.0); n], MAX_RIDGE_ESCALATIONS, false)
}

/// Cross-band STFT system identification followed by a time-domain
/// reconstruction from the band-to-band filters.
///
/// With `taps = ceil(rir_len / hop) + 1` delays per band, the response is
/// rebuilt as `ĥ[n] = Σ_τ g_τ[n - τ·hop]`, where `g_τ` is the inverse DFT of
/// the main-band coefficients at delay `τ`, read with signed lags.
pub fn crossband_deconvolution(
    y: &[f64],
    s: &[f64],
    rir_len: usize,
    cfg: &StftConfig,
    bands: usize,
    ridge: f64,
) -> Result<Vec<f64>> {
    crossband_deconvolution_with_diagnostics(y, s, rir_len, cfg, bands, ridge).map(|(h, _)| h)
}

pub fn taps_for(rir_len: usize, hop: usize) -> usize {
    rir_len.div_ceil(hop) + 1
}

pub fn crossband_deconvolution_with_diagnostics(
    y: &[f64],
    s: &[f64],
    rir_len: usize,
    cfg: &StftConfig,
    bands: usize,
    ridge: f64,
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
    let taps = taps_for(rir_len, cfg.hop);
    let (filters, diagnostics) = identify_band_filters(&ys, &ss, taps, bands, ridge)?;

    let n = cfg.n_fft;
    let fft = FftPair::new(n);
    let mut h = vec![0.0; rir_len];
    for tau in 0..taps {
        let spectrum: Vec<Complex64> = (0..cfg.bins()).map(|f| filters.main(f, tau)).collect();
        let g = fft.inverse_real(&spectrum, n);
        for (m, v) in g.iter().enumerate() {
            let lag = if m < n / 2 { m as isize } else { m as isize - n as isize };
            let idx = (tau * cfg.hop) as isize + lag;
            if idx >= 0 && (idx as usize) < rir_len {
                h[idx as usize] += v;
            }
        }
    }
    Ok((h, diagnostics))
}
