use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fastsvc::bench::run_bench;
use fastsvc::discriminator::DiscriminatorConfig;
use fastsvc::dsp::F0Contour;
use fastsvc::losses::{multiscale_stft_report, LossConfig};
use fastsvc::model_io::{load_bundle, save_bundle, validate_bundle};
use fastsvc::pipeline::{self, ConvertOptions, DEFAULT_NOISE_SEED};
use fastsvc::{
    AudioBuffer, BundleConfig, GeneratorConfig, LinguisticFeatures, Precision, WeightBundle,
};

#[derive(Parser)]
#[command(
    name = "fastsvc",
    version,
    about = "Singing voice conversion inference engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a source recording to a target voice.
    Convert {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        f0: PathBuf,
        #[arg(long)]
        ling: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Speaker name or index; required for multi-voice bundles.
        #[arg(long)]
        speaker: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        semitone_shift: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "strict")]
        mode: Precision,
        #[arg(long, default_value_t = DEFAULT_NOISE_SEED)]
        seed: u64,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the excitation signal and loudness contour of a recording.
    Extract {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        f0: PathBuf,
        #[arg(long)]
        out_excitation: PathBuf,
        /// CSV with columns frame, time_s, loudness_db.
        #[arg(long)]
        out_loudness: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NOISE_SEED)]
        seed: u64,
    },
    /// Multi-resolution STFT distance between two recordings.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Real-time factor of synthesis from random features.
    Bench {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value = "strict")]
        mode: Precision,
    },
    /// Describe a weight bundle.
    Info {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Write a bundle of seeded random weights.
    Init {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Default)]
        preset: Preset,
        /// Comma-separated speaker names; makes the bundle multi-voice.
        #[arg(long, value_delimiter = ',')]
        speakers: Vec<String>,
        #[arg(long)]
        with_discriminator: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    Toy,
}

enum Failure {
    Engine(fastsvc::Error),
    Usage(String),
}

impl From<fastsvc::Error> for Failure {
    fn from(e: fastsvc::Error) -> Self {
        Failure::Engine(e)
    }
}

impl Failure {
    fn line(&self) -> String {
        let (kind, message) = match self {
            Failure::Engine(e) => (e.kind(), e.to_string()),
            Failure::Usage(m) => ("usage", m.clone()),
        };
        format!(
            "error.kind={kind} error.message={}",
            message.replace('\n', " ")
        )
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FASTSVC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            eprintln!("{}", Failure::Usage(first).line());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Convert {
            audio,
            f0,
            ling,
            bundle,
            speaker,
            semitone_shift,
            out,
            mode,
            seed,
            threads,
        } => {
            let audio = AudioBuffer::read_wav(audio)?;
            let f0 = F0Contour::read(f0)?;
            let ling = LinguisticFeatures::read(ling)?;
            let bundle = load_bundle(bundle)?;
            let opts = ConvertOptions {
                speaker,
                semitone_shift,
                precision: mode,
                noise_seed: seed,
            };
            let converted = in_pool(threads, || {
                pipeline::convert(&bundle, &audio, &f0, &ling, &opts)
            })??;
            converted.write_wav(&out)?;
            Ok(format!(
                "samples={}\nout={}\n",
                converted.len(),
                out.display()
            ))
        }
        Command::Extract {
            audio,
            f0,
            out_excitation,
            out_loudness,
            seed,
        } => {
            let audio = AudioBuffer::read_wav(audio)?;
            let f0 = F0Contour::read(f0)?;
            let cond = pipeline::extract(&audio, &f0, seed)?;
            AudioBuffer::new(cond.excitation.samples, audio.sample_rate())?
                .write_wav(&out_excitation)?;
            let mut csv = String::from("frame,time_s,loudness_db\n");
            let sr = audio.sample_rate() as f64;
            for (i, db) in cond.loudness.values.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{i},{:.6},{db:.6}",
                    (i * cond.loudness.hop) as f64 / sr
                );
            }
            fs::write(&out_loudness, csv).map_err(fastsvc::Error::from)?;
            Ok(format!(
                "excitation_samples={}\nloudness_frames={}\n",
                audio.len(),
                cond.loudness.len()
            ))
        }
        Command::Eval { reference, test } => {
            let x = AudioBuffer::read_wav(reference)?;
            let y = AudioBuffer::read_wav(test)?;
            let report = multiscale_stft_report(&x, &y, &LossConfig::default())?;
            let mut out = String::new();
            for s in &report.scales {
                let m = s.fft_size;
                let _ = writeln!(
                    out,
                    "scale.{m}.spectral_convergence={:.9}",
                    s.spectral_convergence
                );
                let _ = writeln!(out, "scale.{m}.log_magnitude={:.9}", s.log_magnitude);
                let _ = writeln!(out, "scale.{m}.total={:.9}", s.total());
            }
            let _ = writeln!(out, "total={:.9}", report.total);
            Ok(out)
        }
        Command::Bench {
            bundle,
            seconds,
            threads,
            mode,
        } => {
            let bundle = load_bundle(bundle)?;
            let r = run_bench(&bundle, seconds, threads, mode)?;
            Ok(format!(
                "audio_seconds={:.6}\nwall_seconds={:.6}\nrtf={:.6}\nthreads={}\nmode={}\n",
                r.audio_seconds, r.wall_seconds, r.rtf, r.threads, r.mode
            ))
        }
        Command::Info { bundle } => {
            let bundle = load_bundle(bundle)?;
            let r = validate_bundle(&bundle);
            let g = bundle.generator_config();
            let mut out = String::new();
            let _ = writeln!(out, "format_version={}", r.format_version);
            let _ = writeln!(out, "generator_params={}", r.generator_params);
            let _ = writeln!(out, "speaker_params={}", r.speaker_params);
            let _ = writeln!(out, "discriminator_params={}", r.discriminator_params);
            let _ = writeln!(
                out,
                "total_params={}",
                r.generator_params + r.discriminator_params
            );
            let _ = writeln!(out, "capability.generator={}", r.has_generator);
            let _ = writeln!(out, "capability.discriminator={}", r.has_discriminator);
            let _ = writeln!(out, "capability.multi_voice={}", r.has_speaker_table);
            let _ = writeln!(out, "up_factors={}", join(&g.up_factors));
            let _ = writeln!(out, "linguistic_hop={}", g.linguistic_hop);
            let _ = writeln!(out, "speakers={}", r.speakers.join(","));
            Ok(out)
        }
        Command::Init {
            out,
            preset,
            speakers,
            with_discriminator,
            seed,
        } => {
            let (generator, disc) = match preset {
                Preset::Default => (GeneratorConfig::default(), DiscriminatorConfig::default()),
                Preset::Toy => (GeneratorConfig::toy(), DiscriminatorConfig::toy()),
            };
            let config = BundleConfig {
                generator: generator.with_speakers(speakers.len()),
                discriminator: with_discriminator.then_some(disc),
                speakers,
            };
            let bundle = WeightBundle::random(config, seed)?;
            save_bundle(&bundle, &out)?;
            Ok(format!("out={}\n", out.display()))
        }
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::Usage(format!("thread pool: {e}"))),
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
