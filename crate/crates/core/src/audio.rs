//! Mono audio buffers and 16-bit PCM WAV I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Sample rate accepted by the WAV reader and assumed by the generator.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono sample sequence with its sample rate. Samples are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Scales every sample by `gain`.
    pub fn scaled(&self, gain: f32) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Reads a 16-bit PCM mono 16 kHz WAV file. Anything else is rejected;
    /// there is no resampling or downmixing.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
        let spec = reader.spec();
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected 16-bit PCM, got {:?} {} bits",
                path.display(),
                spec.sample_format,
                spec.bits_per_sample
            )));
        }
        if spec.channels != 1 {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected mono, got {} channels",
                path.display(),
                spec.channels
            )));
        }
        if spec.sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected {SAMPLE_RATE} Hz, got {} Hz",
                path.display(),
                spec.sample_rate
            )));
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| wav_error(path, e))?;
        Self::new(samples, spec.sample_rate)
    }

    /// Writes 16-bit PCM mono. Samples outside [-1, 1] are clipped.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
        for &s in &self.samples {
            writer
                .write_sample(quantize_i16(s))
                .map_err(|e| wav_error(path, e))?;
        }
        writer.finalize().map_err(|e| wav_error(path, e))
    }
}

fn quantize_i16(s: f32) -> i16 {
    (s.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => {
            Error::UnsupportedFormat(format!("{}: unsupported WAV encoding", path.display()))
        }
        other => Error::UnsupportedFormat(format!("{}: {other}", path.display())),
    }
}
