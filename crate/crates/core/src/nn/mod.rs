//! Numeric kernels: convolution, pooling, normalization, activation and
//! embedding, each with a deliberately simple reference implementation.

mod conv;
pub mod naive;
mod ops;

pub use conv::{conv1d, conv1d_with, ConvSpec, Padding};
pub use ops::{
    avg_pool, embedding_lookup, instance_norm, leaky_relu, leaky_relu_in_place, linear,
    reflect_pad, upsample_nearest, INSTANCE_NORM_EPS, LEAKY_SLOPE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accumulation policy for reductions.
///
/// `Strict` accumulates in f64 with a fixed per-element order, so results are
/// identical across thread counts and SIMD widths. `Fast` accumulates in f32
/// and agrees with strict mode to roughly 1e-4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Strict,
    Fast,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Precision::Strict),
            "fast" => Ok(Precision::Fast),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected strict|fast)"
            ))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::Strict => "strict",
            Precision::Fast => "fast",
        })
    }
}

/// Dense `[channels x time]` single-precision map, row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    time: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, time: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || time == 0 {
            return Err(Error::shape(format!(
                "feature map must be non-empty, got {channels}x{time}"
            )));
        }
        if data.len() != channels * time {
            return Err(Error::shape(format!(
                "feature map {channels}x{time} needs {} values, got {}",
                channels * time,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            time,
            data,
        })
    }

    pub fn zeros(channels: usize, time: usize) -> Result<Self> {
        Self::new(channels, time, vec![0.0; channels * time])
    }

    pub fn from_fn(
        channels: usize,
        time: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * time);
        for c in 0..channels {
            for t in 0..time {
                data.push(f(c, t));
            }
        }
        Self::new(channels, time, data)
    }

    /// Single-channel map from a sample sequence.
    pub fn from_signal(samples: &[f32]) -> Result<Self> {
        Self::new(1, samples.len(), samples.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.time)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[f32] {
        &self.data[c * self.time..(c + 1) * self.time]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.data[c * self.time..(c + 1) * self.time]
    }

    pub fn get(&self, c: usize, t: usize) -> f32 {
        self.data[c * self.time + t]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.time)
    }

    pub fn max_abs_diff(&self, other: &FeatureMap) -> f32 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    /// Elementwise sum, in place.
    pub fn add_assign(&mut self, other: &FeatureMap) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }
}

/// Row-major `[rows x cols]` matrix, used for embedding tables and
/// projection weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}
