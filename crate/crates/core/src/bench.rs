//! Real-time-factor benchmark.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dsp::{self, ExcitationOptions, F0Contour, LoudnessContour, F0_HOP, LOUDNESS_HOP};
use crate::error::{Error, Result};
use crate::features::LinguisticFeatures;
use crate::generator::Generator;
use crate::model_io::WeightBundle;
use crate::nn::Precision;

pub const BENCH_SEED: u64 = 0x5eed;
pub const TIMED_RUNS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub audio_seconds: f64,
    pub wall_seconds: f64,
    /// `wall_seconds / audio_seconds`.
    pub rtf: f64,
    pub threads: usize,
    pub mode: Precision,
    /// Every timed run, in order.
    pub runs: Vec<f64>,
}

/// Seeded synthetic inputs covering `frames` linguistic frames.
pub struct BenchInputs {
    pub ling: LinguisticFeatures,
    pub f0: F0Contour,
    pub loudness: LoudnessContour,
    pub speaker: Option<usize>,
}

impl BenchInputs {
    pub fn random(generator: &Generator, frames: usize, seed: u64) -> Result<Self> {
        let config = generator.config();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = frames * config.linguistic_hop;
        let ling_data = (0..frames * config.linguistic_dim)
            .map(|_| rng.sample::<f32, _>(StandardNormal))
            .collect();
        let ling = LinguisticFeatures::new(
            config.linguistic_hop,
            config.linguistic_dim,
            frames,
            ling_data,
        )?;
        // Vibrato around a drifting base pitch, with occasional unvoiced runs.
        let f0_frames = samples.div_ceil(F0_HOP) + 1;
        let base: f64 = rng.gen_range(150.0..300.0);
        let f0 = (0..f0_frames)
            .map(|i| {
                let t = (i * F0_HOP) as f64 / config.sample_rate as f64;
                if (i / 40) % 5 == 4 {
                    0.0
                } else {
                    base * (1.0 + 0.02 * (std::f64::consts::TAU * 5.5 * t).sin())
                }
            })
            .collect();
        let loud_frames = samples.div_ceil(LOUDNESS_HOP);
        let loudness = (0..loud_frames)
            .map(|_| rng.gen_range(-60.0..-10.0))
            .collect();
        let speaker = config
            .multi_voice()
            .then(|| rng.gen_range(0..config.speaker_count));
        Ok(Self {
            ling,
            f0: F0Contour::new(f0, F0_HOP)?,
            loudness: LoudnessContour {
                values: loudness,
                hop: LOUDNESS_HOP,
            },
            speaker,
        })
    }

    /// Full inference path: conditioning signals plus the generator.
    pub fn synthesize(&self, generator: &Generator, precision: Precision) -> Result<usize> {
        let target = generator.output_len(self.ling.frames());
        let f0 = self.f0.to_audio_rate(target)?;
        let exc = dsp::generate_excitation(
            &f0,
            &ExcitationOptions::new(generator.config().sample_rate as f64, BENCH_SEED),
        )?;
        let loud: Vec<f32> = self
            .loudness
            .to_conditioning(target)?
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let out = generator.forward(&self.ling, &exc.samples, &loud, self.speaker, precision)?;
        Ok(out.len())
    }
}

/// Median-of-5 real-time factor after one untimed warm-up run, on a
/// dedicated pool of `threads` workers.
pub fn run_bench(
    bundle: &WeightBundle,
    seconds: f64,
    threads: usize,
    mode: Precision,
) -> Result<BenchReport> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Error::invalid("benchmark duration must be positive"));
    }
    if threads == 0 {
        return Err(Error::invalid("thread count must be >= 1"));
    }
    let generator = Generator::from_bundle(bundle)?;
    let config = generator.config();
    let frames = ((seconds * config.sample_rate as f64) / config.linguistic_hop as f64)
        .round()
        .max(1.0) as usize;
    let inputs = BenchInputs::random(&generator, frames, BENCH_SEED)?;
    let audio_seconds = generator.output_len(frames) as f64 / config.sample_rate as f64;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let runs = pool.install(|| -> Result<Vec<f64>> {
        inputs.synthesize(&generator, mode)?;
        (0..TIMED_RUNS)
            .map(|_| {
                let start = Instant::now();
                inputs.synthesize(&generator, mode)?;
                Ok(start.elapsed().as_secs_f64())
            })
            .collect()
    })?;
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    let wall_seconds = sorted[TIMED_RUNS / 2];
    log::info!("bench: {audio_seconds:.2}s audio, runs {runs:?}");
    Ok(BenchReport {
        audio_seconds,
        wall_seconds,
        rtf: wall_seconds / audio_seconds,
        threads,
        mode,
        runs,
    })
}
