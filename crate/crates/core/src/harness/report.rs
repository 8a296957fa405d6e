use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::config::Method;
use super::experiment::{read_records, TrialRecord};
use super::wav::load_wav;
use crate::baselines::StftConfig;
use crate::error::Result;
use crate::metrics::{edc, edr};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const CURVES_DIR: &str = "curves";

const METRIC_NAMES: [&str; 4] = ["Δ_RT30 (%)", "Δ_EDC", "Δ_EDR (dB)", "MSE (%)"];

/// Median and sample standard deviation of each metric for one
/// (SNR, method) cell. Metric arrays follow the order RT30, EDC, EDR, MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub method: Method,
    /// Trials with metrics.
    pub n: usize,
    /// Trials that failed.
    pub failures: usize,
    pub median: [f64; 4],
    pub std: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn get(&self, snr_db: f64, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "snr_db,method,n,failures,rt30_pct_median,rt30_pct_std,edc_median,edc_std,edr_median,edr_std,mse_pct_median,mse_pct_std\n",
        );
        for r in &self.rows {
            let _ = write!(out, "{},{},{},{}", r.snr_db, r.method, r.n, r.failures);
            for k in 0..4 {
                let _ = write!(out, ",{},{}", r.median[k], r.std[k]);
            }
            out.push('\n');
        }
        out
    }

    /// Table grouped by SNR, values as `median ± std`.
    pub fn to_text(&self) -> String {
        if self.rows.is_empty() {
            return "No trial records found.\n".into();
        }
        let mut out = format!("{:>8}  {:<6}", "SNR (dB)", "Method");
        for name in METRIC_NAMES {
            let _ = write!(out, "  {name:>20}");
        }
        out.push('\n');
        let mut last = None;
        for r in &self.rows {
            if last.is_some_and(|s| s != r.snr_db) {
                out.push('\n');
            }
            last = Some(r.snr_db);
            let _ = write!(out, "{:>8}  {:<6}", r.snr_db, r.method.name());
            for k in 0..4 {
                let cell = format!("{} ± {}", fmt_value(r.median[k]), fmt_value(r.std[k]));
                let _ = write!(out, "  {cell:>20}");
            }
            if r.failures > 0 {
                let _ = write!(out, "  ({} failed)", r.failures);
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_value(v: f64) -> String {
    if !v.is_finite() {
        "n/a".into()
    } else if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation (`n - 1` denominator); zero for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    match values.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let mean = values.iter().sum::<f64>() / n as f64;
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// One row per (SNR, method), SNR descending, methods in the order vpr, b1, b2.
pub fn summarize(records: &[TrialRecord]) -> Summary {
    let mut snrs: Vec<f64> = Vec::new();
    for r in records {
        if !snrs.contains(&r.snr_db) {
            snrs.push(r.snr_db);
        }
    }
    snrs.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &snr in &snrs {
        for method in Method::ALL {
            let cell: Vec<&TrialRecord> = records.iter().filter(|r| r.snr_db == snr && r.method == method).collect();
            if cell.is_empty() {
                continue;
            }
            let ok: Vec<[f64; 4]> = cell.iter().filter_map(|r| r.metrics.map(|m| m.values())).collect();
            let mut med = [0.0; 4];
            let mut std = [0.0; 4];
            for k in 0..4 {
                let column: Vec<f64> = ok.iter().map(|v| v[k]).collect();
                med[k] = median(&column);
                std[k] = sample_std(&column);
            }
            rows.push(SummaryRow { snr_db: snr, method, n: ok.len(), failures: cell.len() - ok.len(), median: med, std });
        }
    }
    Summary { rows }
}

fn write_curves(record: &TrialRecord, dir: &Path) -> Result<()> {
    let Some(est_file) = &record.estimate_file else {
        return Ok(());
    };
    let (h_ref, _) = load_wav(&record.reference_file)?;
    let (h_est, _) = load_wav(est_file)?;
    let stem = format!("{}_{}", record.trial_id, record.method);
    let fs = f64::from(record.sample_rate);

    let (a, b) = (edc(&h_ref)?, edc(&h_est)?);
    let mut text = String::from("t_s,reference,estimate\n");
    for i in 0..a.len().max(b.len()) {
        let _ = writeln!(text, "{},{},{}", i as f64 / fs, a.get(i).unwrap_or(&0.0), b.get(i).unwrap_or(&0.0));
    }
    fs::write(dir.join(format!("{stem}_edc.csv")), text)?;

    let cfg = StftConfig::edr_default();
    let (a, b) = (edr(&h_ref, &cfg)?, edr(&h_est, &cfg)?);
    let db = |v: f64| 10.0 * v.max(1e-12).log10();
    let mut text = String::from("bin,frame,reference_db,estimate_db\n");
    for bin in 0..a.bins() {
        for t in 0..a.frames().min(b.frames()) {
            let _ = writeln!(text, "{bin},{t},{},{}", db(a.values[bin][t]), db(b.values[bin][t]));
        }
    }
    fs::write(dir.join(format!("{stem}_edr.csv")), text)?;
    Ok(())
}

/// Summarize `out_dir/records.jsonl` into `summary.csv` and `summary.txt`,
/// and write EDC/EDR curves of every estimate under `curves/`.
/// With no records, `summary.txt` states so and the summary is empty.
pub fn report(out_dir: &Path) -> Result<Summary> {
    fs::create_dir_all(out_dir)?;
    let records = read_records(out_dir)?;
    let summary = summarize(&records);
    fs::write(out_dir.join(SUMMARY_CSV), summary.to_csv())?;
    fs::write(out_dir.join(SUMMARY_TXT), summary.to_text())?;
    if records.is_empty() {
        warn!("no trial records in {}", out_dir.display());
        return Ok(summary);
    }
    let curves = out_dir.join(CURVES_DIR);
    fs::create_dir_all(&curves)?;
    for r in &records {
        if let Err(e) = write_curves(r, &curves) {
            warn!("curves for {} / {}: {e}", r.trial_id, r.method);
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricReport;

    fn record(snr: f64, method: Method, v: f64) -> TrialRecord {
        TrialRecord {
            trial_id: format!("t{v}"),
            rir_id: "r".into(),
            snr_db: snr,
            method,
            metrics: Some(MetricReport { delta_rt30_percent: v, delta_edc: v, delta_edr: v, mse_percent: v }),
            error: None,
            wall_time_s: 0.0,
            iterations_used: 0,
            final_loss: None,
            sample_rate: 8000,
            reference_file: "r.wav".into(),
            estimate_file: None,
        }
    }

    #[test]
    fn statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(sample_std(&[5.0]), 0.0);
        assert_eq!(sample_std(&[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn single_record_row() {
        let s = summarize(&[record(10.0, Method::B1, 7.0)]);
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].median, [7.0; 4]);
        assert_eq!(s.rows[0].std, [0.0; 4]);
    }

    #[test]
    fn ordering_and_grouping() {
        let recs = vec![
            record(0.0, Method::B2, 1.0),
            record(20.0, Method::B1, 1.0),
            record(20.0, Method::Vpr, 1.0),
            record(20.0, Method::Vpr, 2.0),
            record(20.0, Method::Vpr, 3.0),
        ];
        let s = summarize(&recs);
        let keys: Vec<(f64, Method)> = s.rows.iter().map(|r| (r.snr_db, r.method)).collect();
        assert_eq!(keys, vec![(20.0, Method::Vpr), (20.0, Method::B1), (0.0, Method::B2)]);
        assert_eq!(s.rows[0].median[3], 2.0);
        assert_eq!(s.rows[0].std[3], 1.0);
        let header = s.to_csv().lines().next().unwrap().to_string();
        let order: Vec<usize> = ["rt30", "edc", "edr", "mse"].iter().map(|k| header.find(k).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_report_notice() {
        let dir = tempfile::tempdir().unwrap();
        let s = report(dir.path()).unwrap();
        assert!(s.rows.is_empty());
        let text = fs::read_to_string(dir.path().join(SUMMARY_TXT)).unwrap();
        assert!(text.contains("No trial records"));
    }
}
