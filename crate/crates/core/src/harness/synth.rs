use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{DrySignal, ExperimentConfig};
use super::resample::resample;
use super::wav::{load_wav, save_wav};
use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{ModelParams, RirOperator};
use crate::signal;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Formant frequencies and bandwidths (Hz) of a neutral vowel.
const FORMANTS: [(f64, f64); 4] = [(500.0, 80.0), (1500.0, 90.0), (2500.0, 120.0), (3500.0, 180.0)];
const ENVELOPE_RATE: f64 = 8000.0;
const SOURCE_RMS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub file: PathBuf,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirEntry {
    pub id: String,
    pub file: PathBuf,
    pub origin: String,
    /// Reverberation time of the untruncated response, seconds.
    pub rt30_s: Option<f64>,
    pub params: Option<ModelParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub id: String,
    pub file: PathBuf,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub trial_id: String,
    pub rir_id: String,
    /// `None` for noiseless observations.
    pub noise_id: Option<String>,
    pub snr_db: f64,
}

/// Index of a generated (or imported) dataset. File paths are relative to
/// the dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sample_rate: u32,
    pub rir_len: usize,
    pub source_len: usize,
    pub seed: u64,
    pub dry: SourceEntry,
    pub rirs: Vec<RirEntry>,
    pub noises: Vec<NoiseEntry>,
    pub trials: Vec<TrialSpec>,
}

impl Manifest {
    pub fn load(data_dir: &Path) -> Result<Self> {
        let path = data_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e} (run `synth` first)", path.display())))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, data_dir: &Path) -> Result<()> {
        fs::create_dir_all(data_dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(data_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

pub fn trial_id(rir_id: &str, snr_db: f64) -> String {
    format!("{rir_id}_snr{snr_db:+.1}")
}

/// Denominator of the all-pole speech envelope, `[1, a1, …, a8]`.
pub fn speech_envelope() -> Vec<f64> {
    let mut den = vec![1.0];
    for (freq, bandwidth) in FORMANTS {
        let radius = (-PI * bandwidth / ENVELOPE_RATE).exp();
        let theta = 2.0 * PI * freq / ENVELOPE_RATE;
        den = signal::direct_convolve(&den, &[1.0, -2.0 * radius * theta.cos(), radius * radius]);
    }
    den
}

fn all_pole(x: &[f64], den: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let mut acc = x[n];
        for k in 1..den.len().min(n + 1) {
            acc -= den[k] * y[n - k];
        }
        y[n] = acc / den[0];
    }
    y
}

fn set_rms(x: &mut [f64], target: f64) {
    let rms = signal::mean_power(x).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / rms);
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Synthetic dry signal of `len` samples.
pub fn synth_dry(kind: DrySignal, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        DrySignal::Impulse => signal::unit_impulse(len),
        DrySignal::White => {
            let mut x = gaussian(rng, len);
            set_rms(&mut x, SOURCE_RMS);
            x
        }
        DrySignal::SpeechShaped => {
            let warmup = 1024;
            let white = gaussian(rng, len + warmup);
            let mut x = all_pole(&white, &speech_envelope()).split_off(warmup);
            set_rms(&mut x, SOURCE_RMS);
            x
        }
    }
}

/// Draw one response from the physical prior with randomized parameters,
/// accepting it once its reverberation time lies in the configured range.
/// Returns the truncated, unit-energy response, its parameters and the
/// reverberation time of the long draw.
pub fn synth_rir(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, ModelParams, f64)> {
    let fs = f64::from(cfg.sample_rate);
    let [lo, hi] = cfg.synth.rt60_ms;
    let long_len = cfg.rir_len.max((cfg.synth.long_s * fs).ceil() as usize);
    for attempt in 0..cfg.synth.max_attempts {
        let rt_target = rng.random_range(lo..hi) / 1000.0;
        let radius = rng.random_range(0.0..cfg.synth.g_max_modulus);
        let angle = rng.random_range(0.0..PI);
        let [p_lo, p_hi] = cfg.synth.p1_range;
        let p1 = if p_hi > p_lo { rng.random_range(p_lo..p_hi) } else { p_lo };
        let params = ModelParams {
            g: vec![1.0, -2.0 * radius * angle.cos(), radius * radius],
            a: 3.0 * 10f64.ln() / (rt_target * fs),
            p: vec![1.0, p1],
            sigma_eps: 1.0,
            sigma_w: 1.0,
        };
        let seed: u64 = rng.random();
        let op = RirOperator::with_coherence(params.clone(), long_len, false)?;
        let long = match op.sample_rir(seed) {
            Ok(h) if h.iter().all(|v| v.is_finite()) => h,
            Ok(_) | Err(Error::Unstable { .. }) => {
                debug!("attempt {attempt}: unusable draw, retrying");
                continue;
            }
            Err(e) => return Err(e),
        };
        let rt = match metrics::rt30(&long, fs) {
            Ok(rt) => rt,
            Err(e) => {
                debug!("attempt {attempt}: {e}");
                continue;
            }
        };
        if !(lo / 1000.0..=hi / 1000.0).contains(&rt) {
            debug!("attempt {attempt}: RT30 {rt:.3} s outside range");
            continue;
        }
        let mut h = long;
        h.truncate(cfg.rir_len);
        let norm = signal::energy(&h).sqrt();
        if !(norm > 0.0) {
            continue;
        }
        h.iter_mut().for_each(|v| *v /= norm);
        return Ok((h, params, rt));
    }
    Err(Error::Numeric(format!(
        "no response with RT in [{lo}, {hi}] ms after {} attempts",
        cfg.synth.max_attempts
    )))
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("{} contains no WAV files", dir.display())));
    }
    Ok(files)
}

fn load_at_rate(path: &Path, rate: u32) -> Result<Vec<f64>> {
    let (x, from) = load_wav(path)?;
    resample(&x, from, rate)
}

/// Generate (or import) responses, a dry signal and noise tracks into
/// `cfg.paths.data_dir`, and write the manifest.
pub fn synth_dataset(cfg: &ExperimentConfig, n_rirs: usize) -> Result<Manifest> {
    cfg.validate()?;
    if n_rirs == 0 {
        return Err(Error::Config("n_rirs must be positive".into()));
    }
    let dir = &cfg.paths.data_dir;
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fs_hz = cfg.sample_rate;
    let source_len = cfg.source_len();
    let obs_len = source_len + cfg.rir_len - 1;

    let (dry, origin) = match &cfg.paths.dry_dir {
        Some(d) => {
            let path = &wav_files(d)?[0];
            let mut x = load_at_rate(path, fs_hz)?;
            if x.len() < source_len {
                return Err(Error::Config(format!(
                    "{} has {} samples at {fs_hz} Hz, need {source_len}",
                    path.display(),
                    x.len()
                )));
            }
            x.truncate(source_len);
            (x, format!("file {}", path.display()))
        }
        None => {
            let origin = match cfg.synth.dry_signal {
                DrySignal::SpeechShaped => "synthetic speech-shaped noise (white noise, order-8 all-pole envelope)",
                DrySignal::White => "synthetic white Gaussian noise",
                DrySignal::Impulse => "unit impulse",
            };
            (synth_dry(cfg.synth.dry_signal, source_len, &mut rng), origin.to_string())
        }
    };
    let dry_file = PathBuf::from("dry.wav");
    save_wav(&dir.join(&dry_file), &dry, fs_hz)?;

    let mut rirs = Vec::with_capacity(n_rirs);
    match &cfg.paths.rir_dir {
        Some(d) => {
            for (i, path) in wav_files(d)?.iter().take(n_rirs).enumerate() {
                let mut h = load_at_rate(path, fs_hz)?;
                h.resize(cfg.rir_len, 0.0);
                let id = format!("rir_{i:03}");
                let file = PathBuf::from(format!("{id}.wav"));
                save_wav(&dir.join(&file), &h, fs_hz)?;
                rirs.push(RirEntry { id, file, origin: format!("file {}", path.display()), rt30_s: None, params: None });
            }
        }
        None => {
            for i in 0..n_rirs {
                let (h, params, rt) = synth_rir(cfg, &mut rng)?;
                let id = format!("rir_{i:03}");
                let file = PathBuf::from(format!("{id}.wav"));
                save_wav(&dir.join(&file), &h, fs_hz)?;
                info!("{id}: RT30 {:.0} ms, a = {:.5}", rt * 1000.0, params.a);
                rirs.push(RirEntry {
                    id,
                    file,
                    origin: "sampled from the physical prior".into(),
                    rt30_s: Some(rt),
                    params: Some(params),
                });
            }
        }
    }

    let mut noises = Vec::new();
    if !cfg.synth.noiseless {
        let real = cfg.paths.noise_dir.as_deref().map(wav_files).transpose()?;
        for (i, rir) in rirs.iter().enumerate() {
            let (track, origin) = match &real {
                Some(files) => {
                    let path = &files[i % files.len()];
                    let mut x = load_at_rate(path, fs_hz)?;
                    if x.len() < obs_len {
                        return Err(Error::Config(format!(
                            "{} has {} samples at {fs_hz} Hz, need {obs_len}",
                            path.display(),
                            x.len()
                        )));
                    }
                    x.truncate(obs_len);
                    (x, format!("file {}", path.display()))
                }
                None => {
                    let mut x = gaussian(&mut rng, obs_len);
                    set_rms(&mut x, SOURCE_RMS);
                    (x, "white Gaussian noise".to_string())
                }
            };
            let id = format!("noise_{i:03}");
            let file = PathBuf::from(format!("{id}.wav"));
            save_wav(&dir.join(&file), &track, fs_hz)?;
            debug!("{id} paired with {}", rir.id);
            noises.push(NoiseEntry { id, file, origin });
        }
    }

    let trials = rirs
        .iter()
        .enumerate()
        .flat_map(|(i, rir)| {
            let noise_id = noises.get(i).map(|n| n.id.clone());
            cfg.snr_list_db.iter().map(move |&snr_db| TrialSpec {
                trial_id: trial_id(&rir.id, snr_db),
                rir_id: rir.id.clone(),
                noise_id: noise_id.clone(),
                snr_db,
            })
        })
        .collect();

    let manifest = Manifest {
        sample_rate: fs_hz,
        rir_len: cfg.rir_len,
        source_len,
        seed: cfg.seed,
        dry: SourceEntry { file: dry_file, origin },
        rirs,
        noises,
        trials,
    };
    manifest.save(dir)?;
    Ok(manifest)
}
