//! Multi-scale waveform discriminator, forward pass only.
//!
//! Scale 1 sees the raw waveform; each further scale sees the previous
//! scale's input average-pooled by 2. Every sub-discriminator is the same
//! layer stack with its own weights, leaky ReLU after every layer but the
//! last, emitting a one-channel score map.

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::model_io::{WeightBundle, DISC_PREFIX};
use crate::nn::{
    avg_pool, conv1d_with, leaky_relu_in_place, reflect_pad, ConvSpec, FeatureMap, Padding,
    Precision,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub groups: usize,
    /// Reflect-pad `(kernel - 1) / 2` frames instead of zero padding.
    #[serde(default)]
    pub reflect: bool,
}

impl DiscLayer {
    fn weight_dims(&self) -> Vec<usize> {
        vec![
            self.out_channels,
            self.in_channels / self.groups,
            self.kernel,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub scales: usize,
    pub layers: Vec<DiscLayer>,
    pub leaky_slope: f32,
}

impl Default for DiscriminatorConfig {
    /// Seven-layer stack: k15 stem, four grouped stride-4 convs (groups =
    /// in / 4), a k5 conv and a k3 one-channel head.
    fn default() -> Self {
        let layer = |cin, cout, kernel, stride, groups, reflect| DiscLayer {
            in_channels: cin,
            out_channels: cout,
            kernel,
            stride,
            groups,
            reflect,
        };
        Self {
            scales: 3,
            layers: vec![
                layer(1, 16, 15, 1, 1, true),
                layer(16, 64, 41, 4, 4, false),
                layer(64, 256, 41, 4, 16, false),
                layer(256, 1024, 41, 4, 64, false),
                layer(1024, 1024, 41, 4, 256, false),
                layer(1024, 1024, 5, 1, 1, false),
                layer(1024, 1, 3, 1, 1, false),
            ],
            leaky_slope: 0.2,
        }
    }
}

impl DiscriminatorConfig {
    /// A narrow stack with the same strides, for tests.
    pub fn toy() -> Self {
        let mut c = Self::default();
        // channel count entering each layer, then the final output
        let widths = [1, 4, 8, 16, 16, 16, 16, 1];
        let groups = [1, 1, 2, 4, 4, 1, 1];
        for (i, layer) in c.layers.iter_mut().enumerate() {
            layer.in_channels = widths[i];
            layer.out_channels = widths[i + 1];
            layer.groups = groups[i];
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::config("discriminator.scales", "must be >= 1"));
        }
        if self.layers.is_empty() {
            return Err(Error::config(
                "discriminator.layers",
                "need at least one layer",
            ));
        }
        let mut channels = 1;
        for (i, l) in self.layers.iter().enumerate() {
            let bad = |why: String| {
                Err(Error::config(
                    "discriminator.layers",
                    format!("layer {i}: {why}"),
                ))
            };
            if l.in_channels != channels {
                return bad(format!(
                    "expects {} inputs, previous layer gives {channels}",
                    l.in_channels
                ));
            }
            if l.kernel % 2 == 0 || l.stride == 0 || l.groups == 0 {
                return bad("kernel must be odd, stride and groups >= 1".into());
            }
            if l.in_channels % l.groups != 0 || l.out_channels % l.groups != 0 {
                return bad("channels not divisible by groups".into());
            }
            channels = l.out_channels;
        }
        if channels != 1 {
            return Err(Error::config(
                "discriminator.layers",
                "last layer must emit one channel",
            ));
        }
        Ok(())
    }

    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for k in 0..self.scales {
            for (l, layer) in self.layers.iter().enumerate() {
                out.push((
                    format!("{DISC_PREFIX}{k}.layer.{l}.weight"),
                    layer.weight_dims(),
                ));
                out.push((
                    format!("{DISC_PREFIX}{k}.layer.{l}.bias"),
                    vec![layer.out_channels],
                ));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensor_shapes()
            .iter()
            .map(|(_, d)| d.iter().product::<usize>())
            .sum()
    }

    /// Receptive field of one sub-discriminator in input samples; also the
    /// shortest accepted input.
    pub fn receptive_field(&self) -> usize {
        let mut field = 1;
        let mut jump = 1;
        for l in &self.layers {
            field += (l.kernel - 1) * jump;
            jump *= l.stride;
        }
        field
    }
}

/// One score map per scale, each `[1 x time_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorOutput {
    pub score_maps: Vec<FeatureMap>,
}

#[derive(Debug, Clone)]
pub struct Discriminator {
    config: DiscriminatorConfig,
    /// `scales[k][l]`
    scales: Vec<Vec<ConvSpec>>,
}

impl Discriminator {
    pub fn from_bundle(bundle: &WeightBundle) -> Result<Self> {
        let config = bundle
            .config()
            .discriminator
            .clone()
            .ok_or(Error::Capability("bundle has no discriminator"))?;
        let scales = (0..config.scales)
            .map(|k| {
                config
                    .layers
                    .iter()
                    .enumerate()
                    .map(|(l, layer)| {
                        let w = bundle.tensor(&format!("{DISC_PREFIX}{k}.layer.{l}.weight"))?;
                        let b = bundle.tensor(&format!("{DISC_PREFIX}{k}.layer.{l}.bias"))?;
                        let spec = ConvSpec::new(
                            layer.in_channels,
                            layer.out_channels,
                            layer.kernel,
                            w.data.clone(),
                            b.data.clone(),
                        )
                        .with_stride(layer.stride)
                        .with_groups(layer.groups);
                        spec.validate()?;
                        Ok(spec)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { config, scales })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn forward(&self, x: &AudioBuffer, precision: Precision) -> Result<DiscriminatorOutput> {
        let min = self.config.receptive_field();
        if x.len() < min {
            return Err(Error::Length {
                what: "discriminator input (min receptive field)",
                expected: min,
                actual: x.len(),
            });
        }
        let mut input = FeatureMap::from_signal(x.samples())?;
        let mut score_maps = Vec::with_capacity(self.scales.len());
        for (k, convs) in self.scales.iter().enumerate() {
            if k > 0 {
                input = avg_pool(&input, 2)?;
            }
            let mut h = input.clone();
            for (l, (conv, layer)) in convs.iter().zip(&self.config.layers).enumerate() {
                h = if layer.reflect {
                    let padded = reflect_pad(&h, (layer.kernel - 1) / 2)?;
                    conv1d_with(&padded, conv, Padding::Valid, precision)?
                } else {
                    conv1d_with(&h, conv, Padding::Same, precision)?
                };
                if l + 1 < convs.len() {
                    leaky_relu_in_place(&mut h, self.config.leaky_slope);
                }
            }
            score_maps.push(h);
        }
        Ok(DiscriminatorOutput { score_maps })
    }
}

pub fn discriminator_forward(
    x: &AudioBuffer,
    bundle: &WeightBundle,
    precision: Precision,
) -> Result<DiscriminatorOutput> {
    Discriminator::from_bundle(bundle)?.forward(x, precision)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let c = DiscriminatorConfig::default();
        c.validate().unwrap();
        assert_eq!(c.receptive_field(), 4951);
        let per_scale = 16 * 15
            + 16
            + 64 * 4 * 41
            + 64
            + 256 * 4 * 41
            + 256
            + 2 * (1024 * 4 * 41 + 1024)
            + 1024 * 1024 * 5
            + 1024
            + 1024 * 3
            + 1;
        assert_eq!(c.param_count(), 3 * per_scale);
    }

    #[test]
    fn toy_layout_is_valid() {
        let c = DiscriminatorConfig::toy();
        c.validate().unwrap();
        assert_eq!(
            c.receptive_field(),
            DiscriminatorConfig::default().receptive_field()
        );
    }

    #[test]
    fn rejects_broken_chain() {
        let mut c = DiscriminatorConfig::default();
        c.layers[2].in_channels = 32;
        assert_eq!(c.validate().unwrap_err().kind(), "config");
    }
}
