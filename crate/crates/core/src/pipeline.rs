//! End-to-end conversion: source audio + F0 + linguistic features in,
//! converted waveform out.

use crate::audio::AudioBuffer;
use crate::dsp::{
    self, compute_loudness, shift_f0_semitones, ExcitationOptions, ExcitationSignal, F0Contour,
    LoudnessContour, LOUDNESS_FFT_SIZE, LOUDNESS_HOP,
};
use crate::error::{Error, Result};
use crate::features::LinguisticFeatures;
use crate::generator::Generator;
use crate::model_io::WeightBundle;
use crate::nn::Precision;

pub const DEFAULT_NOISE_SEED: u64 = 0;

/// Conditioning signals derived from the source recording.
#[derive(Debug, Clone)]
pub struct Conditioning {
    pub excitation: ExcitationSignal,
    pub loudness: LoudnessContour,
}

/// Excitation at the source audio's length, and loudness of the source.
pub fn extract(audio: &AudioBuffer, f0: &F0Contour, noise_seed: u64) -> Result<Conditioning> {
    let f0_audio = f0.to_audio_rate(audio.len())?;
    let excitation = dsp::generate_excitation(
        &f0_audio,
        &ExcitationOptions::new(audio.sample_rate() as f64, noise_seed),
    )?;
    let loudness = compute_loudness(audio, LOUDNESS_HOP, LOUDNESS_FFT_SIZE)?;
    Ok(Conditioning {
        excitation,
        loudness,
    })
}

#[derive(Debug, Clone)]
pub struct ConvertOptions {
    /// Speaker name or index; required for multi-voice bundles.
    pub speaker: Option<String>,
    pub semitone_shift: f64,
    pub precision: Precision,
    pub noise_seed: u64,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self {
            speaker: None,
            semitone_shift: 0.0,
            precision: Precision::Strict,
            noise_seed: DEFAULT_NOISE_SEED,
        }
    }
}

/// Runs the full conversion. Loudness comes from `audio`, pitch from `f0`
/// (transposed by `semitone_shift`), content from `ling`.
pub fn convert(
    bundle: &WeightBundle,
    audio: &AudioBuffer,
    f0: &F0Contour,
    ling: &LinguisticFeatures,
    opts: &ConvertOptions,
) -> Result<AudioBuffer> {
    let generator = Generator::from_bundle(bundle)?;
    let config = generator.config();
    if ling.hop() != config.linguistic_hop {
        return Err(Error::config(
            "linguistic_hop",
            format!(
                "features have hop {}, model expects {}",
                ling.hop(),
                config.linguistic_hop
            ),
        ));
    }
    if audio.sample_rate() != config.sample_rate {
        return Err(Error::UnsupportedFormat(format!(
            "audio at {} Hz, model expects {} Hz",
            audio.sample_rate(),
            config.sample_rate
        )));
    }
    let speaker = opts
        .speaker
        .as_deref()
        .map(|s| bundle.config().resolve_speaker(s))
        .transpose()?;

    let target = generator.output_len(ling.frames());
    let f0 = shift_f0_semitones(f0, opts.semitone_shift);
    let f0_audio = f0.to_audio_rate(target)?;
    let excitation = dsp::generate_excitation(
        &f0_audio,
        &ExcitationOptions::new(config.sample_rate as f64, opts.noise_seed),
    )?;
    let loudness = compute_loudness(audio, LOUDNESS_HOP, LOUDNESS_FFT_SIZE)?
        .to_conditioning(target)?
        .into_iter()
        .map(|v| v as f32)
        .collect::<Vec<_>>();
    log::debug!(
        "convert: {} frames -> {target} samples, speaker {speaker:?}",
        ling.frames()
    );
    generator.forward(
        ling,
        &excitation.samples,
        &loudness,
        speaker,
        opts.precision,
    )
}
