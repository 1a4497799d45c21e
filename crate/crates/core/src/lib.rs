//! CPU inference engine for a FiLM-conditioned singing voice conversion
//! waveform generator, with the DSP front-end and evaluation losses.

pub mod audio;
pub mod bench;
pub mod discriminator;
pub mod dsp;
pub mod error;
pub mod features;
pub mod generator;
pub mod losses;
pub mod model_io;
pub mod nn;
pub mod pipeline;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use features::LinguisticFeatures;
pub use generator::{Generator, GeneratorConfig};
pub use model_io::{BundleConfig, WeightBundle};
pub use nn::{FeatureMap, Precision};
