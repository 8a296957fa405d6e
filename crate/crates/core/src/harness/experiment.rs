use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::report::{report, Summary};
use super::synth::{Manifest, TrialSpec};
use super::wav::{load_wav, save_wav};
use crate::baselines::{crossband_deconvolution, spectral_deconvolution};
use crate::error::{Error, Result};
use crate::inference::{estimate_rir_detailed, InferenceConfig};
use crate::metrics::{compare, mix_at_snr, MetricReport};
use crate::signal;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const ESTIMATES_DIR: &str = "estimates";

/// Outcome of one method on one (response, SNR) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub rir_id: String,
    pub snr_db: f64,
    pub method: Method,
    pub metrics: Option<MetricReport>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub iterations_used: usize,
    pub final_loss: Option<f64>,
    pub sample_rate: u32,
    pub reference_file: PathBuf,
    pub estimate_file: Option<PathBuf>,
}

impl TrialRecord {
    pub fn key(&self) -> (String, Method) {
        (self.trial_id.clone(), self.method)
    }
}

/// Result of running one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub rir: Vec<f64>,
    pub iterations_used: usize,
    pub final_loss: Option<f64>,
}

/// Estimate a response of `rir_len` samples from `y` and `s` with `method`.
pub fn run_method(method: Method, y: &[f64], s: &[f64], cfg: &ExperimentConfig) -> Result<MethodOutput> {
    match method {
        Method::Vpr => {
            let inference = InferenceConfig { rir_len: cfg.rir_len, ..cfg.inference.clone() };
            let est = estimate_rir_detailed(y, s, &inference)?;
            let final_loss = est.state.loss_history.iter().rev().copied().find(|v| v.is_finite());
            Ok(MethodOutput { rir: est.rir, iterations_used: est.state.step_count, final_loss })
        }
        Method::B1 => Ok(MethodOutput {
            rir: spectral_deconvolution(y, s, cfg.rir_len, &cfg.stft)?,
            iterations_used: 0,
            final_loss: None,
        }),
        Method::B2 => Ok(MethodOutput {
            rir: crossband_deconvolution(y, s, cfg.rir_len, &cfg.stft, cfg.crossband_bands, cfg.crossband_ridge)?,
            iterations_used: 0,
            final_loss: None,
        }),
    }
}

/// Records already written to `out_dir`. A truncated final line (from an
/// interrupted run) is skipped.
pub fn read_records(out_dir: &Path) -> Result<Vec<TrialRecord>> {
    let path = out_dir.join(RECORDS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut records = Vec::new();
    for (n, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => records.push(r),
            Err(e) => warn!("{}:{}: skipping unreadable record ({e})", path.display(), n + 1),
        }
    }
    Ok(records)
}

struct Dataset {
    dir: PathBuf,
    manifest: Manifest,
    dry: Vec<f64>,
}

impl Dataset {
    fn load(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        let manifest = Manifest::load(dir)?;
        if manifest.sample_rate != cfg.sample_rate || manifest.rir_len != cfg.rir_len {
            return Err(Error::Config(format!(
                "dataset in {} was generated with {} Hz / L_h = {}, config asks for {} Hz / L_h = {}",
                dir.display(),
                manifest.sample_rate,
                manifest.rir_len,
                cfg.sample_rate,
                cfg.rir_len
            )));
        }
        let (dry, _) = load_wav(&dir.join(&manifest.dry.file))?;
        Ok(Self { dir: dir.to_path_buf(), manifest, dry })
    }

    fn rir_path(&self, id: &str) -> Result<PathBuf> {
        let entry = self.manifest.rirs.iter().find(|r| r.id == id).ok_or_else(|| {
            Error::Config(format!("manifest has no response {id}"))
        })?;
        Ok(self.dir.join(&entry.file))
    }

    /// Reference response and noisy observation for one trial.
    fn trial_signals(&self, spec: &TrialSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        let (h, _) = load_wav(&self.rir_path(&spec.rir_id)?)?;
        let clean = signal::fft_convolve(&self.dry, &h);
        debug_assert_eq!(clean.len(), self.dry.len() + h.len() - 1);
        let y = match &spec.noise_id {
            None => clean,
            Some(id) => {
                let entry = self.manifest.noises.iter().find(|n| &n.id == id).ok_or_else(|| {
                    Error::Config(format!("manifest has no noise track {id}"))
                })?;
                let (noise, _) = load_wav(&self.dir.join(&entry.file))?;
                mix_at_snr(&clean, &noise, spec.snr_db)?.0
            }
        };
        Ok((h, y))
    }
}

fn run_trial(data: &Dataset, spec: &TrialSpec, method: Method, cfg: &ExperimentConfig) -> TrialRecord {
    let start = Instant::now();
    let reference_file = data.rir_path(&spec.rir_id).unwrap_or_default();
    let mut record = TrialRecord {
        trial_id: spec.trial_id.clone(),
        rir_id: spec.rir_id.clone(),
        snr_db: spec.snr_db,
        method,
        metrics: None,
        error: None,
        wall_time_s: 0.0,
        iterations_used: 0,
        final_loss: None,
        sample_rate: cfg.sample_rate,
        reference_file,
        estimate_file: None,
    };
    let outcome = (|| -> Result<(MetricReport, MethodOutput, PathBuf)> {
        let (h, y) = data.trial_signals(spec)?;
        let out = run_method(method, &y, &data.dry, cfg)?;
        let file = cfg.paths.out_dir.join(ESTIMATES_DIR).join(format!("{}_{method}.wav", spec.trial_id));
        save_wav(&file, &out.rir, cfg.sample_rate)?;
        let report = compare(&h, &out.rir, f64::from(cfg.sample_rate), &cfg.edr_stft)?;
        Ok((report, out, file))
    })();
    match outcome {
        Ok((report, out, file)) => {
            record.metrics = Some(report);
            record.iterations_used = out.iterations_used;
            record.final_loss = out.final_loss;
            record.estimate_file = Some(file);
        }
        Err(e) => {
            warn!("{} / {method}: {e}", spec.trial_id);
            record.error = Some(e.to_string());
        }
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    record
}

/// Run every selected method on every trial of the dataset in
/// `cfg.paths.data_dir`, appending one JSON line per finished trial to
/// `out_dir/records.jsonl`. Trials already recorded there are skipped.
/// Returns all records in manifest order and writes the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Summary)> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.paths.data_dir, cfg)?;
    let out_dir = &cfg.paths.out_dir;
    fs::create_dir_all(out_dir)?;

    let done: HashSet<(String, Method)> = read_records(out_dir)?.iter().map(TrialRecord::key).collect();
    let mut work: Vec<(&TrialSpec, Method)> = data
        .manifest
        .trials
        .iter()
        .flat_map(|t| cfg.methods.iter().map(move |&m| (t, m)))
        .filter(|(t, m)| !done.contains(&(t.trial_id.clone(), *m)))
        .collect();
    // slow trials first for better load balance
    work.sort_by_key(|(_, m)| *m != Method::Vpr);
    info!("{} trials to run, {} already recorded", work.len(), done.len());

    let records_path = out_dir.join(RECORDS_FILE);
    let torn = fs::read(&records_path).map(|b| b.last().is_some_and(|&c| c != b'\n')).unwrap_or(false);
    let mut file = OpenOptions::new().create(true).append(true).open(&records_path)?;
    if torn {
        // an interrupted write left a partial line behind
        file.write_all(b"\n")?;
    }
    let appender = Mutex::new(file);
    let append = |record: &TrialRecord| -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut f = appender.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        work.par_iter().try_for_each(|(spec, method)| {
            let record = run_trial(&data, spec, *method, cfg);
            info!("{} / {}: {:.1} s", record.trial_id, record.method, record.wall_time_s);
            append(&record)
        })
    })?;

    let order: Vec<(String, Method)> = data
        .manifest
        .trials
        .iter()
        .flat_map(|t| cfg.methods.iter().map(move |&m| (t.trial_id.clone(), m)))
        .collect();
    let mut all = read_records(out_dir)?;
    all.retain(|r| order.contains(&r.key()));
    all.sort_by_key(|r| order.iter().position(|k| *k == r.key()));
    all.dedup_by_key(|r| r.key());
    let summary = report(out_dir)?;
    Ok((all, summary))
}
