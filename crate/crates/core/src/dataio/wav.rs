//! PCM WAV input and output.

use std::path::Path;

use crate::error::{Error, Result};

/// Mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a WAV file, averages channels to mono and fixes the length to
/// `target_len_s` seconds: longer clips keep their head, shorter clips are
/// zero-padded at the tail.
pub fn load_waveform(path: impl AsRef<Path>, target_len_s: f64, expected_rate: u32) -> Result<Waveform> {
    let path = path.as_ref();
    let (samples, rate) = read_wav_mono(path)?;
    if rate != expected_rate {
        return Err(Error::SampleRateMismatch {
            expected: expected_rate,
            found: rate,
        });
    }
    Ok(prepare(samples, rate, target_len_s))
}

/// Length-normalizes an in-memory mono signal.
pub fn prepare(mut samples: Vec<f64>, sample_rate: u32, target_len_s: f64) -> Waveform {
    let target = (target_len_s * sample_rate as f64).round() as usize;
    samples.resize(target, 0.0);
    Waveform {
        samples,
        sample_rate,
    }
}

pub fn read_wav_mono(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedEncoding("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{bits}-bit {}",
                if fmt == hound::SampleFormat::Int { "integer" } else { "float" }
            )))
        }
    };
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    if let Some(i) = mono.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok((mono, spec.sample_rate))
}

fn wav_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported WAV layout".into()),
        other => Error::UnsupportedEncoding(other.to_string()),
    }
}

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1).
pub fn write_wav_i16(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(|e| wav_err(path, e))?;
    }
    w.finalize().map_err(|e| wav_err(path, e))
}

/// Writes interleaved 32-bit float PCM.
pub fn write_wav_f32(path: impl AsRef<Path>, interleaved: &[f32], channels: u16, sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in interleaved {
        w.write_sample(s).map_err(|e| wav_err(path, e))?;
    }
    w.finalize().map_err(|e| wav_err(path, e))
}
