use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav { path: path.to_path_buf(), source }
}

/// Read a mono 16-bit PCM or 32-bit float file. Integer samples are divided
/// by 32768.
pub fn load_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let reader = WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Unsupported(format!(
            "{}: {} channels, only mono files are accepted",
            path.display(),
            spec.channels
        )));
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wav_err(path))?,
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<Vec<_>, _>>()
            .map_err(wav_err(path))?,
        (format, bits) => {
            return Err(Error::Unsupported(format!(
                "{}: {bits}-bit {format:?} samples (expected 16-bit PCM or 32-bit float)",
                path.display()
            )))
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Write a mono 32-bit float file.
pub fn save_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 32, sample_format: SampleFormat::Float };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err(path))?;
    for &v in samples {
        writer.write_sample(v as f32).map_err(wav_err(path))?;
    }
    writer.finalize().map_err(wav_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let x: Vec<f64> = (0..100).map(|i| f64::from((i as f32 * 0.37).sin())).collect();
        save_wav(&path, &x, 8000).unwrap();
        let (back, rate) = load_wav(&path).unwrap();
        assert_eq!(rate, 8000);
        assert_eq!(back, x);
    }

    #[test]
    fn pcm16_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for i in 0..8 {
            w.write_sample(if i % 2 == 0 { i16::MAX } else { -i16::MAX }).unwrap();
        }
        w.finalize().unwrap();
        let (x, _) = load_wav(&path).unwrap();
        for (i, v) in x.iter().enumerate() {
            let want = if i % 2 == 0 { 32767.0 / 32768.0 } else { -32767.0 / 32768.0 };
            assert_eq!(*v, want);
        }
    }

    #[test]
    fn stereo_is_rejected_with_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = WavSpec { channels: 2, sample_rate: 8000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        let err = load_wav(&path).unwrap_err().to_string();
        assert!(err.contains("2 channels"), "{err}");
    }

    #[test]
    fn corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"RIFFnonsense").unwrap();
        assert!(matches!(load_wav(&path), Err(Error::Wav { .. })));
    }
}
