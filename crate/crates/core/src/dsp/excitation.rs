use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Amplitude of the voiced sinusoid.
pub const SINE_AMPLITUDE: f64 = 0.1;
/// Standard deviation of the additive Gaussian noise n_t.
pub const NOISE_STD: f64 = 0.003;
/// Gain applied to the noise in unvoiced samples.
pub const UNVOICED_NOISE_GAIN: f64 = 100.0;

/// Audio-rate sine-excitation signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSignal {
    pub samples: Vec<f32>,
}

impl ExcitationSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationOptions {
    pub sample_rate: f64,
    /// Initial phase in radians. `None` draws it uniformly from [-pi, pi]
    /// using the seeded generator, once per utterance.
    pub initial_phase: Option<f64>,
    pub noise_seed: u64,
    /// Disables noise and pins the initial phase to zero.
    pub test_mode: bool,
}

impl ExcitationOptions {
    pub fn new(sample_rate: f64, noise_seed: u64) -> Self {
        Self {
            sample_rate,
            initial_phase: None,
            noise_seed,
            test_mode: false,
        }
    }

    pub fn deterministic(sample_rate: f64) -> Self {
        Self {
            sample_rate,
            initial_phase: Some(0.0),
            noise_seed: 0,
            test_mode: true,
        }
    }
}

/// Builds the excitation from an audio-rate F0 sequence.
///
/// Voiced samples are `0.1 * sin(phase_t + phi) + n_t`, where `phase_t`
/// accumulates `2 pi f_k / f_s` over the whole utterance; unvoiced samples
/// are `100 * n_t` with `n_t ~ N(0, 0.003^2)`.
pub fn generate_excitation(f0_audio: &[f64], opts: &ExcitationOptions) -> Result<ExcitationSignal> {
    let fs = opts.sample_rate;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let nyquist = fs / 2.0;
    if let Some((i, f)) = f0_audio
        .iter()
        .enumerate()
        .find(|(_, f)| !(**f >= 0.0 && **f < nyquist))
    {
        return Err(Error::invalid(format!(
            "F0 {f} Hz at sample {i} outside [0, {nyquist}) Hz"
        )));
    }
    if let Some(phi) = opts.initial_phase {
        if !(-PI..=PI).contains(&phi) {
            return Err(Error::invalid(format!(
                "initial phase {phi} outside [-pi, pi]"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.noise_seed);
    let drawn_phase = rng.gen_range(-PI..=PI);
    let phi = if opts.test_mode {
        0.0
    } else {
        opts.initial_phase.unwrap_or(drawn_phase)
    };
    let noise = Normal::new(0.0, NOISE_STD).expect("valid noise std");

    // Phase is tracked in cycles and wrapped to [0, 1) so long utterances do
    // not lose precision.
    let mut cycles = 0.0f64;
    let samples = f0_audio
        .iter()
        .map(|&f| {
            let n = if opts.test_mode {
                0.0
            } else {
                noise.sample(&mut rng)
            };
            cycles += f / fs;
            cycles -= cycles.floor();
            let e = if f > 0.0 {
                SINE_AMPLITUDE * (TAU * cycles + phi).sin() + n
            } else {
                UNVOICED_NOISE_GAIN * n
            };
            e as f32
        })
        .collect();
    Ok(ExcitationSignal { samples })
}
