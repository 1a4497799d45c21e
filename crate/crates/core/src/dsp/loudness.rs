use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const LOUDNESS_HOP: usize = 64;
pub const LOUDNESS_FFT_SIZE: usize = 1024;
pub const LOUDNESS_FLOOR_DB: f64 = -80.0;

/// Frame-rate loudness in dB, clamped at [`LOUDNESS_FLOOR_DB`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoudnessContour {
    pub values: Vec<f64>,
    pub hop: usize,
}

impl LoudnessContour {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Generator conditioning: dB mapped to [-1, 1] and interpolated to
    /// one value per sample.
    pub fn to_conditioning(&self, target_len: usize) -> Result<Vec<f64>> {
        let normalized: Vec<f64> = self
            .values
            .iter()
            .map(|&db| normalize_loudness(db))
            .collect();
        super::upsample_linear(&normalized, self.hop, target_len)
    }
}

/// Affine map from [-80, 0] dB onto [-1, 1], clamped.
pub fn normalize_loudness(db: f64) -> f64 {
    (db / -LOUDNESS_FLOOR_DB * 2.0 + 1.0).clamp(-1.0, 1.0)
}

/// A-weighting gain in dB at `freq` Hz, normalized to exactly 0 dB at 1 kHz.
pub fn a_weighting_db(freq: f64) -> f64 {
    fn response(f: f64) -> f64 {
        let f2 = f * f;
        let num = 12194.0f64.powi(2) * f2 * f2;
        let den = (f2 + 20.6f64.powi(2))
            * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
            * (f2 + 12194.0f64.powi(2));
        num / den
    }
    if freq <= 0.0 {
        return f64::NEG_INFINITY;
    }
    20.0 * (response(freq) / response(1000.0)).log10()
}

/// A-weighted loudness per frame.
///
/// Each frame is a Hann-windowed, zero-padded window centred on sample
/// `i * hop`. Bin powers are scaled so their mean equals the
/// window-compensated mean-square power of the frame, weighted per bin by
/// the A-curve, and converted to dB with a floor of -80 dB.
pub fn compute_loudness(
    audio: &AudioBuffer,
    hop: usize,
    fft_size: usize,
) -> Result<LoudnessContour> {
    loudness_impl(audio, hop, fft_size, true)
}

/// Same as [`compute_loudness`] without the A-weighting gains.
pub fn compute_power_loudness(
    audio: &AudioBuffer,
    hop: usize,
    fft_size: usize,
) -> Result<LoudnessContour> {
    loudness_impl(audio, hop, fft_size, false)
}

fn loudness_impl(
    audio: &AudioBuffer,
    hop: usize,
    fft_size: usize,
    weighted: bool,
) -> Result<LoudnessContour> {
    if hop == 0 {
        return Err(Error::invalid("loudness hop must be positive"));
    }
    if fft_size < 2 {
        return Err(Error::invalid("loudness fft size must be at least 2"));
    }
    let x = audio.samples();
    if x.len() < fft_size {
        return Err(Error::Length {
            what: "loudness input (min one analysis window)",
            expected: fft_size,
            actual: x.len(),
        });
    }

    let bins = fft_size / 2 + 1;
    let window = hann_window(fft_size);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let sr = audio.sample_rate() as f64;
    // Per-bin factor: one-sided Parseval weight, A-gain, and the scaling
    // that turns a mean over bins into mean-square power.
    let bin_gain: Vec<f64> = (0..bins)
        .map(|k| {
            let one_sided = if k == 0 || (fft_size.is_multiple_of(2) && k == bins - 1) {
                1.0
            } else {
                2.0
            };
            let a = if weighted {
                10f64.powf(a_weighting_db(k as f64 * sr / fft_size as f64) / 10.0)
            } else {
                1.0
            };
            one_sided * a * bins as f64 / (fft_size as f64 * window_energy)
        })
        .collect();

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let frames = x.len().div_ceil(hop);
    let half = fft_size as isize / 2;
    let floor_power = 10f64.powf(LOUDNESS_FLOOR_DB / 10.0);

    let values = (0..frames)
        .map(|i| {
            let start = (i * hop) as isize - half;
            for (n, slot) in buf.iter_mut().enumerate() {
                let idx = start + n as isize;
                let s = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize] as f64
                } else {
                    0.0
                };
                *slot = Complex::new(s * window[n], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            let mean = buf[..bins]
                .iter()
                .zip(&bin_gain)
                .map(|(c, g)| c.norm_sqr() * g)
                .sum::<f64>()
                / bins as f64;
            10.0 * mean.max(floor_power).log10()
        })
        .collect();
    Ok(LoudnessContour { values, hop })
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}
