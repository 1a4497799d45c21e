//! The waveform generator.
//!
//! Linguistic features (one frame per `linguistic_hop` samples) pass through
//! a stem conv and a chain of up-sample blocks. Two down-sampling branches
//! turn the audio-rate excitation and loudness signals into one map per
//! up-block resolution; each map drives a FiLM module whose scale and shift
//! modulate the matching up-block. A final conv and `tanh` emit the
//! waveform.

mod blocks;
mod config;
mod film;

pub use blocks::{dblock_forward, ublock_forward, DownBlock, UpBlock};
pub use config::{
    param_count, tensor_shapes, validate_config, GeneratorConfig, BLOCK_KERNEL, BRANCHES,
    FILM_KERNEL, HEAD_KERNEL, INPUT_KERNEL, SPEAKER_PREFIX, SPEAKER_TABLE, STEM_KERNEL,
};
pub use film::{feature_affine, film_forward, FiLMOutput};

use blocks::load_conv;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::LinguisticFeatures;
use crate::model_io::WeightBundle;
use crate::nn::{
    conv1d_with, embedding_lookup, linear, ConvSpec, FeatureMap, Matrix, Padding, Precision,
};

/// One conditioning branch: audio-rate input conv, down blocks and the FiLM
/// convs for every scale.
#[derive(Debug, Clone)]
pub struct ConditioningBranch {
    pub input: ConvSpec,
    /// `downs[j]` maps scale `j + 1` to scale `j`.
    pub downs: Vec<DownBlock>,
    pub films: Vec<ConvSpec>,
}

impl ConditioningBranch {
    fn from_bundle(bundle: &WeightBundle, name: &str) -> Result<Self> {
        let n = bundle.generator_config().blocks();
        Ok(Self {
            input: load_conv(bundle, &format!("gen.{name}.input"), 1)?,
            downs: (0..n - 1)
                .map(|j| DownBlock::from_bundle(bundle, name, j))
                .collect::<Result<_>>()?,
            films: (0..n)
                .map(|i| load_conv(bundle, &format!("gen.{name}.film.{i}"), 1))
                .collect::<Result<_>>()?,
        })
    }

    /// Feature maps for every scale, finest last: `maps[i]` has the
    /// channel count and frame rate of up-block `i`'s output.
    pub fn maps(&self, signal: &[f32], precision: Precision) -> Result<Vec<FeatureMap>> {
        let n = self.films.len();
        let mut maps = Vec::with_capacity(n);
        maps.push(conv1d_with(
            &FeatureMap::from_signal(signal)?,
            &self.input,
            Padding::Same,
            precision,
        )?);
        for down in self.downs.iter().rev() {
            let next = dblock_forward(maps.last().unwrap(), down, precision)?;
            maps.push(next);
        }
        maps.reverse();
        Ok(maps)
    }
}

#[derive(Debug, Clone)]
struct SpeakerPath {
    table: Matrix,
    projections: Vec<(Matrix, Vec<f32>)>,
}

/// Generator weights unpacked from a bundle. Immutable and reentrant.
#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
    stem: ConvSpec,
    ups: Vec<UpBlock>,
    sine: ConditioningBranch,
    loud: ConditioningBranch,
    head: ConvSpec,
    speaker: Option<SpeakerPath>,
}

impl Generator {
    pub fn from_bundle(bundle: &WeightBundle) -> Result<Self> {
        let config = bundle.generator_config().clone();
        config.validate()?;
        let speaker = if config.multi_voice() {
            let table = bundle.tensor(SPEAKER_TABLE)?;
            let projections = (0..config.blocks())
                .map(|i| {
                    let w = bundle.tensor(&format!("{SPEAKER_PREFIX}proj.{i}.weight"))?;
                    let b = bundle.tensor(&format!("{SPEAKER_PREFIX}proj.{i}.bias"))?;
                    Ok((
                        Matrix::new(w.dims[0], w.dims[1], w.data.clone())?,
                        b.data.clone(),
                    ))
                })
                .collect::<Result<_>>()?;
            Some(SpeakerPath {
                table: Matrix::new(table.dims[0], table.dims[1], table.data.clone())?,
                projections,
            })
        } else {
            None
        };
        Ok(Self {
            stem: load_conv(bundle, "gen.stem", 1)?,
            ups: (0..config.blocks())
                .map(|i| UpBlock::from_bundle(bundle, i))
                .collect::<Result<_>>()?,
            sine: ConditioningBranch::from_bundle(bundle, BRANCHES[0])?,
            loud: ConditioningBranch::from_bundle(bundle, BRANCHES[1])?,
            head: load_conv(bundle, "gen.head", 1)?,
            speaker,
            config,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn up_blocks(&self) -> &[UpBlock] {
        &self.ups
    }

    pub fn sine_branch(&self) -> &ConditioningBranch {
        &self.sine
    }

    pub fn loudness_branch(&self) -> &ConditioningBranch {
        &self.loud
    }

    /// Output samples for `frames` linguistic frames.
    pub fn output_len(&self, frames: usize) -> usize {
        frames * self.config.linguistic_hop
    }

    /// Per-block speaker vectors: the embedding row projected to each
    /// block's channel count.
    pub fn speaker_vectors(&self, speaker_id: Option<usize>) -> Result<Option<Vec<Vec<f32>>>> {
        match (&self.speaker, speaker_id) {
            (None, None) => Ok(None),
            (None, Some(id)) => Err(Error::UnknownSpeaker(format!(
                "{id} (single-voice model has no speaker table)"
            ))),
            (Some(_), None) => Err(Error::UnknownSpeaker(
                "none given (multi-voice model needs a speaker)".into(),
            )),
            (Some(path), Some(id)) => {
                let emb = embedding_lookup(&path.table, id).map_err(|_| {
                    Error::UnknownSpeaker(format!("{id} (model has {} speakers)", path.table.rows))
                })?;
                path.projections
                    .iter()
                    .map(|(w, b)| linear(&emb, w, b))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    /// Synthesizes `ling.frames() * linguistic_hop` samples.
    ///
    /// `excitation` and `loudness` are audio-rate; `loudness` is already
    /// normalized to [-1, 1].
    pub fn forward(
        &self,
        ling: &LinguisticFeatures,
        excitation: &[f32],
        loudness: &[f32],
        speaker_id: Option<usize>,
        precision: Precision,
    ) -> Result<AudioBuffer> {
        if ling.hop() != self.config.linguistic_hop {
            return Err(Error::config(
                "linguistic_hop",
                format!(
                    "features have hop {}, model expects {}",
                    ling.hop(),
                    self.config.linguistic_hop
                ),
            ));
        }
        if ling.dim() != self.config.linguistic_dim {
            return Err(Error::config(
                "linguistic_dim",
                format!(
                    "features have dim {}, model expects {}",
                    ling.dim(),
                    self.config.linguistic_dim
                ),
            ));
        }
        let expected = self.output_len(ling.frames());
        if excitation.len() != expected {
            return Err(Error::Length {
                what: "excitation",
                expected,
                actual: excitation.len(),
            });
        }
        if loudness.len() != expected {
            return Err(Error::Length {
                what: "loudness",
                expected,
                actual: loudness.len(),
            });
        }
        let speaker = self.speaker_vectors(speaker_id)?;

        let sine_maps = self.sine.maps(excitation, precision)?;
        let loud_maps = self.loud.maps(loudness, precision)?;

        let mut h = conv1d_with(&ling.to_feature_map(), &self.stem, Padding::Same, precision)?;
        for (i, block) in self.ups.iter().enumerate() {
            let s = film_forward(&sine_maps[i], &self.sine.films[i], precision)?;
            let l = film_forward(&loud_maps[i], &self.loud.films[i], precision)?;
            let v = speaker.as_ref().map(|v| v[i].as_slice());
            h = ublock_forward(&h, &s, &l, v, block, precision)?;
        }
        let y = conv1d_with(&h, &self.head, Padding::Same, precision)?;
        let samples = y.into_data().into_iter().map(f32::tanh).collect();
        AudioBuffer::new(samples, self.config.sample_rate)
    }
}

/// One-shot forward pass straight from a bundle.
pub fn generator_forward(
    ling: &LinguisticFeatures,
    excitation: &[f32],
    loudness: &[f32],
    speaker_id: Option<usize>,
    bundle: &WeightBundle,
    precision: Precision,
) -> Result<AudioBuffer> {
    Generator::from_bundle(bundle)?.forward(ling, excitation, loudness, speaker_id, precision)
}
