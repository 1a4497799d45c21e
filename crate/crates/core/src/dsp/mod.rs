//! Signal-processing front-end: F0 interpolation, sine excitation and
//! A-weighted loudness.
//!
//! Everything here is a pure function of its inputs. Randomness (excitation
//! noise and initial phase) comes from an explicit seed.

mod excitation;
mod interp;
mod loudness;

pub use excitation::{generate_excitation, ExcitationOptions, ExcitationSignal};
pub use interp::upsample_linear;
pub use loudness::{
    a_weighting_db, compute_loudness, compute_power_loudness, hann_window, normalize_loudness,
    LoudnessContour, LOUDNESS_FFT_SIZE, LOUDNESS_FLOOR_DB, LOUDNESS_HOP,
};

use crate::error::{Error, Result};

/// Default F0 frame hop in samples (5 ms at 16 kHz).
pub const F0_HOP: usize = 80;

/// Frame-rate pitch contour in Hz. Zero marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour {
    values: Vec<f64>,
    hop: usize,
}

impl F0Contour {
    pub fn new(values: Vec<f64>, hop: usize) -> Result<Self> {
        if hop == 0 {
            return Err(Error::invalid("F0 hop must be positive"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "F0 value {v} at frame {i} must be finite and non-negative"
            )));
        }
        Ok(Self { values, hop })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interpolates the contour to one value per audio sample.
    pub fn to_audio_rate(&self, target_len: usize) -> Result<Vec<f64>> {
        upsample_linear(&self.values, self.hop, target_len)
    }
}

/// Transposes voiced frames by `semitones`; unvoiced frames stay zero.
pub fn shift_f0_semitones(contour: &F0Contour, semitones: f64) -> F0Contour {
    let ratio = (semitones / 12.0).exp2();
    F0Contour {
        values: contour
            .values
            .iter()
            .map(|&f| if f > 0.0 { f * ratio } else { 0.0 })
            .collect(),
        hop: contour.hop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octave_shift_doubles_voiced_frames() {
        let c = F0Contour::new(vec![220.0, 0.0, 220.0], F0_HOP).unwrap();
        assert_eq!(shift_f0_semitones(&c, 12.0).values(), &[440.0, 0.0, 440.0]);
    }

    #[test]
    fn zero_shift_is_identity() {
        let c = F0Contour::new(vec![123.4, 0.0, 98.7, 301.0], F0_HOP).unwrap();
        assert_eq!(shift_f0_semitones(&c, 0.0), c);
    }

    #[test]
    fn fifth_matches_high_precision_value() {
        // 2^(7/12) to 30 digits, from an arbitrary-precision evaluation.
        const FIFTH: f64 = 1.498_307_076_876_681_5;
        let c = F0Contour::new(vec![100.0], F0_HOP).unwrap();
        let got = shift_f0_semitones(&c, 7.0).values()[0];
        let want = 100.0 * FIFTH;
        assert!(((got - want) / want).abs() <= 1e-9, "{got} vs {want}");
        assert!((got - 149.83).abs() < 0.01);
    }

    #[test]
    fn rejects_negative_f0_and_zero_hop() {
        assert!(F0Contour::new(vec![-1.0], F0_HOP).is_err());
        assert!(F0Contour::new(vec![100.0], 0).is_err());
    }
}
