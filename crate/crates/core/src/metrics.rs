//! Acoustic comparison metrics between a reference and an estimated
//! response, and SNR-controlled noise mixing.

use serde::{Deserialize, Serialize};

use crate::baselines::{stft, StftConfig};
use crate::error::{invalid, Error, Result};
use crate::signal;

/// Upper end of the RT30 fit range, dB.
pub const RT_FIT_START_DB: f64 = -5.0;
/// Lower end of the RT30 fit range, dB.
pub const RT_FIT_END_DB: f64 = -35.0;
/// Reference decay-relief region used for `Δ_EDR`, dB.
pub const EDR_REGION_DB: f64 = -30.0;
/// Floor applied to decay-relief values before taking logs, dB.
pub const EDR_FLOOR_DB: f64 = -80.0;

/// Deviations between a reference response and an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "rt30_pct")]
    pub delta_rt30_percent: f64,
    #[serde(rename = "edc")]
    pub delta_edc: f64,
    #[serde(rename = "edr")]
    pub delta_edr: f64,
    #[serde(rename = "mse_pct")]
    pub mse_percent: f64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "rt30_pct,edc,edr,mse_pct";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.delta_rt30_percent, self.delta_edc, self.delta_edr, self.mse_percent)
    }

    /// Values in table column order.
    pub fn values(&self) -> [f64; 4] {
        [self.delta_rt30_percent, self.delta_edc, self.delta_edr, self.mse_percent]
    }
}

fn nonzero(h: &[f64], what: &str) -> Result<()> {
    if h.is_empty() || h.iter().all(|v| *v == 0.0) {
        return Err(invalid(format!("{what} is empty or all zero")));
    }
    Ok(())
}

/// Schroeder backward integration, normalized to 1 at `t = 0`.
pub fn edc(h: &[f64]) -> Result<Vec<f64>> {
    nonzero(h, "impulse response")?;
    let mut out = vec![0.0; h.len()];
    let mut acc = 0.0;
    for (dst, v) in out.iter_mut().zip(h).rev() {
        acc += v * v;
        *dst = acc;
    }
    let total = out[0];
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Reverberation time extrapolated from a least-squares fit to the energy
/// decay curve between -5 and -35 dB, in seconds.
pub fn rt30(h: &[f64], sample_rate: f64) -> Result<f64> {
    if !(sample_rate > 0.0) {
        return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
    }
    let curve: Vec<f64> = edc(h)?.into_iter().map(to_db).collect();
    let Some(start) = curve.iter().position(|&d| d <= RT_FIT_START_DB) else {
        return Err(Error::InsufficientDecay { floor_db: *curve.last().unwrap(), needed_db: RT_FIT_START_DB });
    };
    let Some(end) = curve[start..].iter().position(|&d| d < RT_FIT_END_DB).map(|i| i + start) else {
        return Err(Error::InsufficientDecay { floor_db: *curve.last().unwrap(), needed_db: RT_FIT_END_DB });
    };
    let points: Vec<(f64, f64)> = (start..end)
        .filter(|&i| curve[i].is_finite())
        .map(|i| (i as f64 / sample_rate, curve[i]))
        .collect();
    if points.len() < 2 {
        return Err(Error::Domain(format!(
            "only {} decay samples between {RT_FIT_START_DB} and {RT_FIT_END_DB} dB",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_d = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(t, d)| (t - mean_t) * (d - mean_d)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - mean_t).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Domain(format!("non-decaying fit, slope {slope} dB/s")));
    }
    Ok(-60.0 / slope)
}

/// Energy decay relief: per-band Schroeder integration over STFT frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRelief {
    /// `values[bin][frame]`, normalized to 1 at frame 0 for valid bands.
    pub values: Vec<Vec<f64>>,
    /// `false` for bands with no energy at all.
    pub valid: Vec<bool>,
}

impl DecayRelief {
    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn frames(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

pub fn edr(h: &[f64], cfg: &StftConfig) -> Result<DecayRelief> {
    nonzero(h, "impulse response")?;
    let spec = stft(h, cfg)?;
    let frames = spec.n_frames();
    let mut values = Vec::with_capacity(spec.bins());
    let mut valid = Vec::with_capacity(spec.bins());
    for bin in 0..spec.bins() {
        let mut band = vec![0.0; frames];
        let mut acc = 0.0;
        for t in (0..frames).rev() {
            acc += spec.get(bin, t).norm_sqr();
            band[t] = acc;
        }
        let total = band[0];
        let ok = total > 0.0;
        if ok {
            band.iter_mut().for_each(|v| *v /= total);
        }
        values.push(band);
        valid.push(ok);
    }
    Ok(DecayRelief { values, valid })
}

fn pad_to(h: &[f64], len: usize) -> Vec<f64> {
    let mut v = h.to_vec();
    v.resize(len, 0.0);
    v
}

/// RT30 with one trailing zero appended, so that the end of a truncated
/// response counts as complete decay.
fn rt30_guarded(h: &[f64], sample_rate: f64) -> Result<f64> {
    let mut padded = h.to_vec();
    padded.push(0.0);
    rt30(&padded, sample_rate)
}

/// Compare an estimate against a reference response.
pub fn compare(h_ref: &[f64], h_est: &[f64], sample_rate: f64, cfg: &StftConfig) -> Result<MetricReport> {
    nonzero(h_ref, "reference response")?;
    nonzero(h_est, "estimated response")?;
    let len = h_ref.len().max(h_est.len());
    let r = pad_to(h_ref, len);
    let e = pad_to(h_est, len);

    let rt_ref = rt30_guarded(&r, sample_rate)?;
    let rt_est = rt30_guarded(&e, sample_rate)?;
    let delta_rt30_percent = (rt_est - rt_ref).abs() / rt_ref * 100.0;

    let edc_ref = edc(&r)?;
    let edc_est = edc(&e)?;
    let delta_edc = edc_ref.iter().zip(&edc_est).map(|(a, b)| (a - b).abs()).sum::<f64>() / len as f64;

    let delta_edr = edr_deviation(&r, &e, cfg)?;

    let mse_percent = signal::mean_power(&r.iter().zip(&e).map(|(a, b)| a - b).collect::<Vec<_>>())
        / signal::mean_power(&r)
        * 100.0;

    Ok(MetricReport { delta_rt30_percent, delta_edc, delta_edr, mse_percent })
}

/// Mean absolute dB difference between decay reliefs over bands valid in
/// both, restricted to where the reference is above -30 dB.
pub fn edr_deviation(h_ref: &[f64], h_est: &[f64], cfg: &StftConfig) -> Result<f64> {
    let a = edr(h_ref, cfg)?;
    let b = edr(h_est, cfg)?;
    let floor = 10f64.powf(EDR_FLOOR_DB / 10.0);
    let region = 10f64.powf(EDR_REGION_DB / 10.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for bin in 0..a.bins() {
        if !(a.valid[bin] && b.valid[bin]) {
            continue;
        }
        for t in 0..a.frames() {
            let ra = a.values[bin][t];
            if ra < region {
                continue;
            }
            let db_a = to_db(ra.max(floor));
            let db_b = to_db(b.values[bin][t].max(floor));
            sum += (db_a - db_b).abs();
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Scale `noise` so that the clean-to-noise power ratio is `snr_db`, and
/// add it to `clean`. Powers are mean squares over the clean support.
pub fn mix_at_snr(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<(Vec<f64>, f64)> {
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR must be finite, got {snr_db}")));
    }
    if noise.len() < clean.len() {
        return Err(invalid(format!("noise has {} samples, clean {}", noise.len(), clean.len())));
    }
    let noise = &noise[..clean.len()];
    let p_clean = signal::mean_power(clean);
    let p_noise = signal::mean_power(noise);
    if !(p_clean > 0.0) || !(p_noise > 0.0) {
        return Err(invalid("clean and noise signals need nonzero power"));
    }
    let scale = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let mixed = clean.iter().zip(noise).map(|(c, n)| c + scale * n).collect();
    Ok((mixed, scale))
}

/// `10·log10(P_clean / P_noise)`.
pub fn measured_snr_db(clean: &[f64], noise: &[f64]) -> f64 {
    10.0 * (signal::mean_power(clean) / signal::mean_power(noise)).log10()
}
