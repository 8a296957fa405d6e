use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::StftConfig;
use crate::error::{Error, Result};
use crate::inference::InferenceConfig;

/// Estimation methods compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Variational estimate under the physical prior.
    Vpr,
    /// Frame-averaged spectral division.
    B1,
    /// Cross-band STFT filtering.
    B2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Vpr, Method::B1, Method::B2];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vpr => "vpr",
            Method::B1 => "b1",
            Method::B2 => "b2",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vpr" => Ok(Method::Vpr),
            "b1" => Ok(Method::B1),
            "b2" => Ok(Method::B2),
            other => Err(Error::Config(format!("unknown method {other:?} (expected vpr, b1 or b2)"))),
        }
    }
}

/// Dry signal generated when no `dry_dir` is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrySignal {
    /// White noise through a fixed all-pole speech envelope.
    #[default]
    SpeechShaped,
    White,
    /// Unit impulse followed by silence.
    Impulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of real dry recordings (WAV); the first file in name order is used.
    pub dry_dir: Option<PathBuf>,
    /// Directory of real responses (WAV), used instead of sampled ones.
    pub rir_dir: Option<PathBuf>,
    /// Directory of real noise recordings (WAV), cycled over responses.
    pub noise_dir: Option<PathBuf>,
    /// Where `synth` writes the dataset and `run` reads it.
    pub data_dir: PathBuf,
    /// Where `run` writes records, estimates and summaries.
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { dry_dir: None, rir_dir: None, noise_dir: None, data_dir: "data".into(), out_dir: "results".into() }
    }
}

/// Ranges used when sampling synthetic responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Accepted reverberation times, milliseconds.
    pub rt60_ms: [f64; 2],
    /// Largest root modulus of the sampled microphone filter.
    pub g_max_modulus: f64,
    /// Range of the first coefficient of the sampled `p`. Negative values
    /// shorten the high-band decay; the response diverges once `|p1|`
    /// exceeds the decay rate, so the range must stay well below it.
    pub p1_range: [f64; 2],
    /// Length of the generated response before truncation, seconds.
    pub long_s: f64,
    pub max_attempts: usize,
    pub dry_signal: DrySignal,
    /// Leave the observations noiseless.
    pub noiseless: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rt60_ms: [60.0, 250.0],
            g_max_modulus: 0.6,
            p1_range: [-0.002, 0.0],
            long_s: 0.4,
            max_attempts: 200,
            dry_signal: DrySignal::SpeechShaped,
            noiseless: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample_rate: u32,
    #[serde(rename = "L_h")]
    pub rir_len: usize,
    pub duration_s: f64,
    pub snr_list_db: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub n_rirs: usize,
    /// Concurrent trials; 0 uses every core.
    pub workers: usize,
    pub paths: Paths,
    pub synth: SynthConfig,
    /// `L_h` here is overridden by the top-level value.
    pub inference: InferenceConfig,
    /// Analysis used by both baselines.
    pub stft: StftConfig,
    /// Analysis used for decay reliefs.
    pub edr_stft: StftConfig,
    /// Bands per side used by the cross-band baseline (1 = band-to-band only).
    pub crossband_bands: usize,
    pub crossband_ridge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Small profile that runs the full sweep in minutes.
    ///
    /// With only 2000 iterations the optimizer runs at `lr = 1e-2` with
    /// `beta2 = 0.9`: the posterior variances start at 1 and must shrink by
    /// several orders of magnitude in log space, which the default step size
    /// and second-moment memory cannot achieve within the budget.
    pub fn desk() -> Self {
        let inference = InferenceConfig {
            iterations: 2000,
            rir_len: 256,
            lr: 1e-2,
            beta2: 0.9,
            ..InferenceConfig::default()
        };
        Self {
            sample_rate: 8000,
            rir_len: 256,
            duration_s: 1.0,
            snr_list_db: vec![20.0, 10.0, 3.0, 0.0, -3.0],
            methods: Method::ALL.to_vec(),
            seed: 0,
            n_rirs: 6,
            workers: 0,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            inference,
            stft: StftConfig::default(),
            edr_stft: StftConfig::edr_default(),
            crossband_bands: 1,
            crossband_ridge: 1e-6,
        }
    }

    /// 1000-sample responses, 2 s of dry signal, 30 responses.
    pub fn full() -> Self {
        let mut cfg = Self::desk();
        cfg.rir_len = 1000;
        cfg.duration_s = 2.0;
        cfg.n_rirs = 30;
        cfg.inference = InferenceConfig { iterations: 5000, rir_len: 1000, ..InferenceConfig::default() };
        cfg
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::Config(format!("unknown profile {other:?} (expected desk or full)"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.inference.rir_len = cfg.rir_len;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Number of dry-signal samples.
    pub fn source_len(&self) -> usize {
        (self.sample_rate as f64 * self.duration_s).round() as usize
    }

    /// Keep the nested response length in sync and check invariants.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        if self.rir_len == 0 || self.rir_len >= self.source_len() {
            return Err(Error::Config(format!(
                "L_h = {} must be positive and below sample_rate·duration_s = {}",
                self.rir_len,
                self.source_len()
            )));
        }
        if self.inference.rir_len != self.rir_len {
            return Err(Error::Config(format!(
                "inference.L_h = {} differs from L_h = {}",
                self.inference.rir_len, self.rir_len
            )));
        }
        if let Some(bad) = self.snr_list_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("SNR values must be finite, got {bad}")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if self.crossband_bands == 0 {
            return Err(Error::Config("crossband_bands must be ≥ 1".into()));
        }
        let [lo, hi] = self.synth.rt60_ms;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config(format!("synth.rt60_ms must be an increasing positive range, got [{lo}, {hi}]")));
        }
        let [p_lo, p_hi] = self.synth.p1_range;
        let slowest = 3.0 * 10f64.ln() / (hi / 1000.0 * f64::from(self.sample_rate));
        if !(p_lo <= p_hi && p_lo.abs().max(p_hi.abs()) < slowest) {
            return Err(Error::Config(format!(
                "synth.p1_range [{p_lo}, {p_hi}] must be ordered and within ±{slowest:.2e}, the slowest decay rate"
            )));
        }
        self.inference.validate()?;
        self.stft.validate()?;
        self.edr_stft.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::full().validate().unwrap();
        assert!(ExperimentConfig::preset("huge").is_err());
    }

    #[test]
    fn toml_roundtrip_and_partial_files() {
        let cfg = ExperimentConfig::full();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);

        let partial = ExperimentConfig::from_toml_str("L_h = 128\nmethods = [\"b1\"]\n").unwrap();
        assert_eq!(partial.rir_len, 128);
        assert_eq!(partial.inference.rir_len, 128);
        assert_eq!(partial.methods, vec![Method::B1]);
        assert_eq!(partial.sample_rate, 8000);
    }

    #[test]
    fn invariants() {
        let mut cfg = ExperimentConfig::desk();
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk();
        cfg.snr_list_db.push(f64::INFINITY);
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("L_h = 9000").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }
}
