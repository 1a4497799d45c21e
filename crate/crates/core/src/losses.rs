//! Training objectives as evaluation functions: multi-resolution STFT loss
//! and least-squares adversarial terms.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::discriminator::DiscriminatorOutput;
use crate::dsp::LOUDNESS_FFT_SIZE;
use crate::error::{Error, Result};
use crate::nn::FeatureMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub fft_sizes: Vec<usize>,
    /// Fraction of a window shared with the next frame.
    pub overlap: f64,
    pub alpha: f64,
    /// Magnitudes are clamped to at least this before taking logs.
    pub log_floor: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            fft_sizes: vec![2048, 1024, 512, 256, 128, 64],
            overlap: 0.75,
            alpha: 2.5,
            log_floor: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_sizes.is_empty()
            || self
                .fft_sizes
                .iter()
                .any(|&m| m < 4 || !m.is_power_of_two())
        {
            return Err(Error::config("fft_sizes", "need powers of two >= 4"));
        }
        if !(self.overlap > 0.0 && self.overlap < 1.0) {
            return Err(Error::config("overlap", "must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be positive"));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return Err(Error::config("log_floor", "must be positive"));
        }
        Ok(())
    }

    pub fn hop(&self, fft_size: usize) -> usize {
        ((fft_size as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    pub fn max_fft(&self) -> usize {
        self.fft_sizes
            .iter()
            .copied()
            .max()
            .unwrap_or(LOUDNESS_FFT_SIZE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => crate::dsp::hann_window(n),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Magnitude spectrogram, `frames x bins`, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: usize,
    pub frames: usize,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }
}

/// `|STFT|` with frames centred on multiples of `hop` (reflect padding of
/// `fft_size / 2` at both ends), giving `1 + len / hop` frames of
/// `fft_size / 2 + 1` bins.
pub fn stft_magnitude(
    x: &AudioBuffer,
    fft_size: usize,
    hop: usize,
    window: Window,
) -> Result<Spectrogram> {
    if fft_size < 2 || hop == 0 {
        return Err(Error::invalid("stft needs fft_size >= 2 and hop >= 1"));
    }
    let s = x.samples();
    if s.len() < fft_size {
        return Err(Error::Length {
            what: "stft input (min one window)",
            expected: fft_size,
            actual: s.len(),
        });
    }
    let half = fft_size / 2;
    let n = s.len() as isize;
    let reflect = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        s[j as usize] as f64
    };
    let w = window.coefficients(fft_size);
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let bins = half + 1;
    let frames = 1 + s.len() / hop;
    let mut data = Vec::with_capacity(frames * bins);
    for f in 0..frames {
        let start = (f * hop) as isize - half as isize;
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(reflect(start + k as isize) * w[k], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram { bins, frames, data })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleLoss {
    pub fft_size: usize,
    pub spectral_convergence: f64,
    pub log_magnitude: f64,
}

impl ScaleLoss {
    pub fn total(&self) -> f64 {
        self.spectral_convergence + self.log_magnitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StftLossReport {
    pub scales: Vec<ScaleLoss>,
    pub total: f64,
}

/// Spectral convergence (Frobenius ratio) plus mean absolute log-magnitude
/// difference, averaged over all FFT sizes.
pub fn multiscale_stft_loss(x: &AudioBuffer, y: &AudioBuffer, config: &LossConfig) -> Result<f64> {
    multiscale_stft_report(x, y, config).map(|r| r.total)
}

/// Per-scale breakdown of [`multiscale_stft_loss`]; `x` is the reference.
pub fn multiscale_stft_report(
    x: &AudioBuffer,
    y: &AudioBuffer,
    config: &LossConfig,
) -> Result<StftLossReport> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(Error::Length {
            what: "compared signal",
            expected: x.len(),
            actual: y.len(),
        });
    }
    let mut scales = Vec::with_capacity(config.fft_sizes.len());
    for &m in &config.fft_sizes {
        let hop = config.hop(m);
        let sx = stft_magnitude(x, m, hop, Window::Hann)?;
        let sy = stft_magnitude(y, m, hop, Window::Hann)?;
        let mut diff_sq = 0.0;
        let mut ref_sq = 0.0;
        let mut log_abs = 0.0;
        for (&a, &b) in sx.data.iter().zip(&sy.data) {
            diff_sq += (a - b) * (a - b);
            ref_sq += a * a;
            log_abs += (a.max(config.log_floor).ln() - b.max(config.log_floor).ln()).abs();
        }
        let spectral_convergence = if diff_sq == 0.0 {
            0.0
        } else {
            diff_sq.sqrt() / ref_sq.sqrt().max(config.log_floor)
        };
        scales.push(ScaleLoss {
            fft_size: m,
            spectral_convergence,
            log_magnitude: log_abs / sx.data.len() as f64,
        });
    }
    let total = scales.iter().map(ScaleLoss::total).sum::<f64>() / scales.len() as f64;
    Ok(StftLossReport { scales, total })
}

fn rms_of(map: &FeatureMap, f: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = map.data().iter().map(|&v| f(v as f64).powi(2)).sum();
    (sum / map.data().len() as f64).sqrt()
}

/// Generator adversarial term: mean over scales of RMS(1 - D_k(fake)).
pub fn adv_loss(d_fake: &DiscriminatorOutput) -> f64 {
    let maps = &d_fake.score_maps;
    maps.iter().map(|m| rms_of(m, |v| 1.0 - v)).sum::<f64>() / maps.len() as f64
}

/// Discriminator term: mean over scales of RMS(1 - D_k(real)) + RMS(D_k(fake)).
pub fn disc_loss(d_real: &DiscriminatorOutput, d_fake: &DiscriminatorOutput) -> Result<f64> {
    if d_real.score_maps.len() != d_fake.score_maps.len() {
        return Err(Error::shape(format!(
            "{} real score maps vs {} fake",
            d_real.score_maps.len(),
            d_fake.score_maps.len()
        )));
    }
    let k = d_real.score_maps.len() as f64;
    Ok(d_real
        .score_maps
        .iter()
        .zip(&d_fake.score_maps)
        .map(|(r, f)| rms_of(r, |v| 1.0 - v) + rms_of(f, |v| v))
        .sum::<f64>()
        / k)
}

/// `l_stft + alpha * l_adv`.
pub fn generator_loss(l_stft: f64, l_adv: f64, alpha: f64) -> f64 {
    l_stft + alpha * l_adv
}
