//! Experiment harness: audio I/O, rate conversion, synthetic datasets,
//! parameter sweeps and result summaries.

mod config;
mod experiment;
mod report;
mod resample;
mod synth;
mod wav;

pub use config::{DrySignal, ExperimentConfig, Method, Paths, SynthConfig};
pub use experiment::{read_records, run_experiment, run_method, MethodOutput, TrialRecord, ESTIMATES_DIR, RECORDS_FILE};
pub use report::{median, report, sample_std, summarize, Summary, SummaryRow, CURVES_DIR, SUMMARY_CSV, SUMMARY_TXT};
pub use resample::{resample, SUPPORTED_RATES};
pub use synth::{
    speech_envelope, synth_dataset, synth_dry, synth_rir, trial_id, Manifest, NoiseEntry, RirEntry, SourceEntry,
    TrialSpec, MANIFEST_FILE,
};
pub use wav::{load_wav, save_wav};
