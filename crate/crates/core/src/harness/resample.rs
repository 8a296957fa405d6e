use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Rates accepted by [`resample`].
pub const SUPPORTED_RATES: [u32; 4] = [8000, 16000, 44100, 48000];

/// Cutoff as a fraction of the lower Nyquist frequency.
const CUTOFF: f64 = 0.9;
/// Zero crossings of the sinc kernel kept on each side.
const ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 8.6;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Windowed-sinc rate conversion with a Kaiser window.
pub fn resample(x: &[f64], from_rate: u32, to_rate: u32) -> Result<Vec<f64>> {
    for rate in [from_rate, to_rate] {
        if !SUPPORTED_RATES.contains(&rate) {
            return Err(Error::Unsupported(format!("sample rate {rate} Hz (supported: {SUPPORTED_RATES:?})")));
        }
    }
    if from_rate == to_rate {
        return Ok(x.to_vec());
    }
    let g = gcd(u64::from(from_rate), u64::from(to_rate));
    let up = u64::from(to_rate) / g;
    let down = u64::from(from_rate) / g;

    // cutoff in cycles per input sample
    let fc = 0.5 * CUTOFF * (f64::from(to_rate) / f64::from(from_rate)).min(1.0);
    let half_width = ZERO_CROSSINGS / (2.0 * fc);
    let norm = bessel_i0(KAISER_BETA);
    let kernel = |t: f64| -> f64 {
        let r = t / half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = 2.0 * fc * t;
        let sinc = if arg == 0.0 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
        2.0 * fc * sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
    };

    let out_len = (x.len() as u64 * up).div_ceil(down) as usize;
    let reach = half_width.ceil() as i64;
    Ok((0..out_len as u64)
        .map(|n| {
            let base = (n * down / up) as i64;
            let frac = (n * down % up) as f64 / up as f64;
            let lo = (base - reach).max(0);
            let hi = (base + reach + 1).min(x.len() as i64);
            (lo..hi).map(|k| x[k as usize] * kernel((base - k) as f64 + frac)).sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / rate).sin()).collect()
    }

    #[test]
    fn identical_rates_pass_through() {
        let x = vec![0.1, -0.4, 0.3];
        assert_eq!(resample(&x, 16000, 16000).unwrap(), x);
    }

    #[test]
    fn unsupported_rate() {
        assert!(matches!(resample(&[0.0], 22050, 8000), Err(Error::Unsupported(_))));
    }

    #[test]
    fn passband_tone_keeps_amplitude() {
        let y = resample(&tone(1000.0, 16000.0, 16000), 16000, 8000).unwrap();
        assert_eq!(y.len(), 8000);
        let want = tone(1000.0, 8000.0, 8000);
        // ignore filter edges
        let mid = 1000..7000;
        let err: f64 = mid.clone().map(|i| (y[i] - want[i]).abs()).fold(0.0, f64::max);
        assert!(err < 0.01, "max deviation {err}");
    }

    #[test]
    fn stopband_tone_is_removed() {
        let y = resample(&tone(5000.0, 16000.0, 16000), 16000, 8000).unwrap();
        let power: f64 = y[1000..7000].iter().map(|v| v * v).sum::<f64>() / 6000.0;
        let db = 10.0 * (power / 0.5).log10();
        assert!(db < -40.0, "residual {db} dB");
    }

    #[test]
    fn upsampling_44100_to_48000() {
        let y = resample(&tone(440.0, 44100.0, 4410), 44100, 48000).unwrap();
        assert_eq!(y.len(), 4800);
        let want = tone(440.0, 48000.0, 4800);
        let err: f64 = (500..4300).map(|i| (y[i] - want[i]).abs()).fold(0.0, f64::max);
        assert!(err < 0.01, "max deviation {err}");
    }
}
