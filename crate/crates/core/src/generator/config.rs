use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STEM_KERNEL: usize = 3;
pub const BLOCK_KERNEL: usize = 3;
pub const FILM_KERNEL: usize = 3;
pub const INPUT_KERNEL: usize = 3;
pub const HEAD_KERNEL: usize = 7;

pub const SPEAKER_PREFIX: &str = "gen.speaker.";
pub const SPEAKER_TABLE: &str = "gen.speaker.table";

/// The two conditioning branches, in tensor-name form.
pub const BRANCHES: [&str; 2] = ["sine", "loud"];

/// Architecture hyperparameters of the waveform generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub linguistic_dim: usize,
    pub linguistic_hop: usize,
    pub up_factors: Vec<usize>,
    pub up_channels: Vec<usize>,
    pub up_dilations: Vec<usize>,
    pub down_dilations: Vec<usize>,
    pub leaky_slope: f32,
    /// 0 selects single-voice mode (no speaker path).
    pub speaker_count: usize,
    pub speaker_embed_dim: usize,
    pub sample_rate: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            linguistic_dim: 144,
            linguistic_hop: 320,
            up_factors: vec![4, 4, 4, 5],
            up_channels: vec![192, 96, 48, 24],
            up_dilations: vec![1, 3, 9, 27],
            down_dilations: vec![1, 2, 4],
            leaky_slope: 0.2,
            speaker_count: 0,
            speaker_embed_dim: 64,
            sample_rate: 16_000,
        }
    }
}

impl GeneratorConfig {
    /// Narrow config with the default time structure, for fast tests.
    pub fn toy() -> Self {
        Self {
            linguistic_dim: 8,
            up_channels: vec![16, 8, 8, 4],
            speaker_embed_dim: 6,
            ..Self::default()
        }
    }

    pub fn with_speakers(mut self, count: usize) -> Self {
        self.speaker_count = count;
        self
    }

    pub fn blocks(&self) -> usize {
        self.up_factors.len()
    }

    pub fn multi_voice(&self) -> bool {
        self.speaker_count > 0
    }

    /// Samples per frame of the map feeding up-block `i`'s FiLM, i.e. the
    /// hop after that block.
    pub fn scale_hop(&self, i: usize) -> usize {
        self.up_factors[i + 1..].iter().product()
    }

    /// Checks every structural invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        if self.linguistic_dim == 0 {
            return Err(Error::config("linguistic_dim", "must be positive"));
        }
        if self.linguistic_hop == 0 {
            return Err(Error::config("linguistic_hop", "must be positive"));
        }
        if self.up_factors.is_empty() || self.up_factors.contains(&0) {
            return Err(Error::config(
                "up_factors",
                format!(
                    "need at least one factor, all >= 1, got {:?}",
                    self.up_factors
                ),
            ));
        }
        if self.up_channels.len() != self.up_factors.len() {
            return Err(Error::config(
                "up_channels",
                format!(
                    "{} channel counts for {} up-sample factors",
                    self.up_channels.len(),
                    self.up_factors.len()
                ),
            ));
        }
        if self.up_channels.contains(&0) {
            return Err(Error::config(
                "up_channels",
                "channel counts must be positive",
            ));
        }
        let product: usize = self.up_factors.iter().product();
        if product != self.linguistic_hop {
            return Err(Error::config(
                "up_factors",
                format!(
                    "product {product} of {:?} must equal linguistic_hop {}",
                    self.up_factors, self.linguistic_hop
                ),
            ));
        }
        if self.up_dilations.is_empty() || self.up_dilations.contains(&0) {
            return Err(Error::config(
                "up_dilations",
                "need at least one dilation, all >= 1",
            ));
        }
        if self.down_dilations.is_empty() || self.down_dilations.contains(&0) {
            return Err(Error::config(
                "down_dilations",
                "need at least one dilation, all >= 1",
            ));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(Error::config(
                "leaky_slope",
                "must be finite and non-negative",
            ));
        }
        if self.multi_voice() && self.speaker_embed_dim == 0 {
            return Err(Error::config(
                "speaker_embed_dim",
                "must be positive with speakers",
            ));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Free-function form of [`GeneratorConfig::validate`].
pub fn validate_config(config: &GeneratorConfig) -> Result<()> {
    config.validate()
}

fn conv_shapes(out: &mut Vec<(String, Vec<usize>)>, name: &str, dims: [usize; 3]) {
    out.push((format!("{name}.weight"), dims.to_vec()));
    out.push((format!("{name}.bias"), vec![dims[0]]));
}

/// Every generator tensor name and shape, in a fixed order.
///
/// A config with no up-sample blocks degenerates to the speaker table alone.
pub fn tensor_shapes(config: &GeneratorConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    let n = config.blocks();
    let ch = &config.up_channels;
    if n > 0 && ch.len() == n {
        conv_shapes(
            &mut out,
            "gen.stem",
            [ch[0], config.linguistic_dim, STEM_KERNEL],
        );
        for i in 0..n {
            let cin = if i == 0 { ch[0] } else { ch[i - 1] };
            for j in 0..config.up_dilations.len() {
                let c = if j == 0 { cin } else { ch[i] };
                conv_shapes(
                    &mut out,
                    &format!("gen.up.{i}.conv.{j}"),
                    [ch[i], c, BLOCK_KERNEL],
                );
            }
            conv_shapes(&mut out, &format!("gen.up.{i}.residual"), [ch[i], cin, 1]);
        }
        for branch in BRANCHES {
            conv_shapes(
                &mut out,
                &format!("gen.{branch}.input"),
                [ch[n - 1], 1, INPUT_KERNEL],
            );
            for j in 0..n - 1 {
                let (cin, cout) = (ch[j + 1], ch[j]);
                for m in 0..config.down_dilations.len() {
                    let c = if m == 0 { cin } else { cout };
                    conv_shapes(
                        &mut out,
                        &format!("gen.{branch}.down.{j}.conv.{m}"),
                        [cout, c, BLOCK_KERNEL],
                    );
                }
                conv_shapes(
                    &mut out,
                    &format!("gen.{branch}.down.{j}.residual"),
                    [cout, cin, 1],
                );
            }
            for (i, &c) in ch.iter().enumerate() {
                conv_shapes(
                    &mut out,
                    &format!("gen.{branch}.film.{i}"),
                    [2 * c, c, FILM_KERNEL],
                );
            }
        }
        conv_shapes(&mut out, "gen.head", [1, ch[n - 1], HEAD_KERNEL]);
    }
    if config.multi_voice() {
        let e = config.speaker_embed_dim;
        out.push((SPEAKER_TABLE.to_string(), vec![config.speaker_count, e]));
        if ch.len() == n {
            for (i, &c) in ch.iter().enumerate() {
                out.push((format!("{SPEAKER_PREFIX}proj.{i}.weight"), vec![c, e]));
                out.push((format!("{SPEAKER_PREFIX}proj.{i}.bias"), vec![c]));
            }
        }
    }
    out
}

/// Total trainable generator parameters for `config`.
pub fn param_count(config: &GeneratorConfig) -> usize {
    tensor_shapes(config)
        .iter()
        .map(|(_, dims)| dims.iter().product::<usize>())
        .sum()
}
