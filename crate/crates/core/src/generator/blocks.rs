//! Up-sample and down-sample blocks.
//!
//! ```text
//! UBlock(in -> out, f):
//!   main:     lrelu -> up(f) -> conv(d0) -> affine [-> IN + spk]
//!             -> lrelu -> conv(d1) -> affine [-> IN + spk] -> ...
//!   residual: up(f) -> conv1x1
//!
//! DBlock(in -> out, f):
//!   main:     pool(f) -> lrelu -> conv(d0) -> lrelu -> conv(d1) -> ...
//!   residual: pool(f) -> conv1x1
//! ```

use super::config::{GeneratorConfig, BLOCK_KERNEL};
use super::film::{feature_affine, FiLMOutput};
use crate::error::{Error, Result};
use crate::model_io::WeightBundle;
use crate::nn::{
    avg_pool, conv1d_with, instance_norm, leaky_relu, leaky_relu_in_place, upsample_nearest,
    ConvSpec, FeatureMap, Padding, Precision, INSTANCE_NORM_EPS,
};

/// Reads `{name}.weight` / `{name}.bias` into a conv with the given dilation.
pub(crate) fn load_conv(bundle: &WeightBundle, name: &str, dilation: usize) -> Result<ConvSpec> {
    let w = bundle.tensor(&format!("{name}.weight"))?;
    let b = bundle.tensor(&format!("{name}.bias"))?;
    if w.dims.len() != 3 {
        return Err(Error::shape(format!(
            "{name}.weight must be rank 3, got {:?}",
            w.dims
        )));
    }
    let spec = ConvSpec::new(
        w.dims[1],
        w.dims[0],
        w.dims[2],
        w.data.clone(),
        b.data.clone(),
    )
    .with_dilation(dilation);
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct UpBlock {
    pub factor: usize,
    pub convs: Vec<ConvSpec>,
    pub residual: ConvSpec,
    pub slope: f32,
    /// Instance-normalize each affine result and add the speaker vector.
    pub speaker_fusion: bool,
}

impl UpBlock {
    pub fn from_bundle(bundle: &WeightBundle, index: usize) -> Result<Self> {
        let config = bundle.generator_config();
        let convs = config
            .up_dilations
            .iter()
            .enumerate()
            .map(|(j, &d)| load_conv(bundle, &format!("gen.up.{index}.conv.{j}"), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            factor: config.up_factors[index],
            convs,
            residual: load_conv(bundle, &format!("gen.up.{index}.residual"), 1)?,
            slope: config.leaky_slope,
            speaker_fusion: config.multi_voice(),
        })
    }

    pub fn in_channels(&self) -> usize {
        self.residual.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.residual.out_channels
    }
}

pub fn ublock_forward(
    x: &FeatureMap,
    sine: &FiLMOutput,
    loud: &FiLMOutput,
    speaker: Option<&[f32]>,
    block: &UpBlock,
    precision: Precision,
) -> Result<FeatureMap> {
    if x.channels() != block.in_channels() {
        return Err(Error::shape(format!(
            "up block expects {} channels, got {}",
            block.in_channels(),
            x.channels()
        )));
    }
    match (block.speaker_fusion, speaker) {
        (false, Some(_)) => {
            return Err(Error::invalid(
                "speaker vector given to a single-voice block",
            ))
        }
        (true, None) => return Err(Error::invalid("multi-voice block needs a speaker vector")),
        (true, Some(v)) if v.len() != block.out_channels() => {
            return Err(Error::shape(format!(
                "speaker vector has {} values, block has {} channels",
                v.len(),
                block.out_channels()
            )))
        }
        _ => {}
    }

    let mut h = upsample_nearest(&leaky_relu(x, block.slope), block.factor)?;
    for (j, conv) in block.convs.iter().enumerate() {
        if j > 0 {
            leaky_relu_in_place(&mut h, block.slope);
        }
        h = conv1d_with(&h, conv, Padding::Same, precision)?;
        h = feature_affine(&h, sine, loud)?;
        if let Some(v) = speaker {
            h = instance_norm(&h, INSTANCE_NORM_EPS)?;
            for (c, &s) in v.iter().enumerate() {
                h.row_mut(c).iter_mut().for_each(|e| *e += s);
            }
        }
    }
    // A 1x1 conv commutes with nearest up-sampling, so run it at the lower rate.
    let residual = conv1d_with(x, &block.residual, Padding::Same, precision)?;
    h.add_assign(&upsample_nearest(&residual, block.factor)?)?;
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct DownBlock {
    pub factor: usize,
    pub convs: Vec<ConvSpec>,
    pub residual: ConvSpec,
    pub slope: f32,
}

impl DownBlock {
    /// Down block `index` of `branch`, which pools by
    /// `up_factors[index + 1]`.
    pub fn from_bundle(bundle: &WeightBundle, branch: &str, index: usize) -> Result<Self> {
        let config = bundle.generator_config();
        let convs = config
            .down_dilations
            .iter()
            .enumerate()
            .map(|(m, &d)| load_conv(bundle, &format!("gen.{branch}.down.{index}.conv.{m}"), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            factor: config.up_factors[index + 1],
            convs,
            residual: load_conv(bundle, &format!("gen.{branch}.down.{index}.residual"), 1)?,
            slope: config.leaky_slope,
        })
    }

    /// A block with all-zero weights.
    pub fn zeros(config: &GeneratorConfig, cin: usize, cout: usize, factor: usize) -> Self {
        let convs = config
            .down_dilations
            .iter()
            .enumerate()
            .map(|(m, &d)| {
                ConvSpec::zeros(if m == 0 { cin } else { cout }, cout, BLOCK_KERNEL)
                    .with_dilation(d)
            })
            .collect();
        Self {
            factor,
            convs,
            residual: ConvSpec::zeros(cin, cout, 1),
            slope: config.leaky_slope,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.residual.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.residual.out_channels
    }
}

pub fn dblock_forward(
    x: &FeatureMap,
    block: &DownBlock,
    precision: Precision,
) -> Result<FeatureMap> {
    if x.channels() != block.in_channels() {
        return Err(Error::shape(format!(
            "down block expects {} channels, got {}",
            block.in_channels(),
            x.channels()
        )));
    }
    let pooled = avg_pool(x, block.factor)?;
    let mut h = pooled.clone();
    for conv in &block.convs {
        leaky_relu_in_place(&mut h, block.slope);
        h = conv1d_with(&h, conv, Padding::Same, precision)?;
    }
    h.add_assign(&conv1d_with(
        &pooled,
        &block.residual,
        Padding::Same,
        precision,
    )?)?;
    Ok(h)
}
