use std::ops::{Add, AddAssign, Mul};

use rayon::prelude::*;

use super::{FeatureMap, Precision};
use crate::error::{Error, Result};

/// Zero-padding policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Symmetric padding of `(kernel - 1) * dilation / 2` on both sides;
    /// output length is `ceil(time / stride)`. Requires an odd kernel.
    Same,
    /// No padding.
    Valid,
}

/// Weights and hyperparameters of a 1-D convolution.
///
/// `weight` is laid out `[out_channels][in_channels / groups][kernel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub groups: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvSpec {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        weight: Vec<f32>,
        bias: Vec<f32>,
    ) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            dilation: 1,
            stride: 1,
            groups: 1,
            weight,
            bias,
        }
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self::new(
            in_channels,
            out_channels,
            kernel,
            vec![0.0; out_channels * in_channels * kernel],
            vec![0.0; out_channels],
        )
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Sets the group count. The weight length must already match
    /// `out * (in / groups) * kernel`.
    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    pub fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_per_group() * self.kernel
    }

    pub fn weight_at(&self, out: usize, in_local: usize, tap: usize) -> f32 {
        self.weight[(out * self.in_per_group() + in_local) * self.kernel + tap]
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 || self.kernel == 0 {
            return Err(Error::shape("conv channels and kernel must be positive"));
        }
        if self.dilation == 0 || self.stride == 0 || self.groups == 0 {
            return Err(Error::shape(
                "conv dilation, stride and groups must be >= 1",
            ));
        }
        if !self.in_channels.is_multiple_of(self.groups)
            || !self.out_channels.is_multiple_of(self.groups)
        {
            return Err(Error::shape(format!(
                "channels {}->{} not divisible by groups {}",
                self.in_channels, self.out_channels, self.groups
            )));
        }
        if self.weight.len() != self.weight_len() {
            return Err(Error::shape(format!(
                "conv weight has {} values, expected {}x{}x{}",
                self.weight.len(),
                self.out_channels,
                self.in_per_group(),
                self.kernel
            )));
        }
        if self.bias.len() != self.out_channels {
            return Err(Error::shape(format!(
                "conv bias has {} values, expected {}",
                self.bias.len(),
                self.out_channels
            )));
        }
        Ok(())
    }

    /// Left padding and output length for an input of `time` frames.
    pub fn geometry(&self, time: usize, padding: Padding) -> Result<(usize, usize)> {
        let span = (self.kernel - 1) * self.dilation;
        match padding {
            Padding::Same => {
                if self.kernel.is_multiple_of(2) {
                    return Err(Error::shape(format!(
                        "same padding needs an odd kernel, got {}",
                        self.kernel
                    )));
                }
                Ok((span / 2, time.div_ceil(self.stride)))
            }
            Padding::Valid => {
                if time <= span {
                    return Err(Error::shape(format!(
                        "valid conv needs more than {span} frames, got {time}"
                    )));
                }
                Ok((0, (time - span - 1) / self.stride + 1))
            }
        }
    }
}

/// Strict-precision convolution.
pub fn conv1d(x: &FeatureMap, spec: &ConvSpec, padding: Padding) -> Result<FeatureMap> {
    conv1d_with(x, spec, padding, Precision::Strict)
}

/// Convolution with an explicit accumulation policy. Work is split over
/// blocks of output channels on the current rayon pool; each output element
/// is reduced in the same order regardless of the split.
pub fn conv1d_with(
    x: &FeatureMap,
    spec: &ConvSpec,
    padding: Padding,
    precision: Precision,
) -> Result<FeatureMap> {
    spec.validate()?;
    if x.channels() != spec.in_channels {
        return Err(Error::shape(format!(
            "conv expects {} input channels, got {}",
            spec.in_channels,
            x.channels()
        )));
    }
    let (pad, out_len) = spec.geometry(x.time(), padding)?;
    let data = match precision {
        Precision::Strict => run::<f64, 8>(x, spec, pad, out_len),
        Precision::Fast => run::<f32, 16>(x, spec, pad, out_len),
    };
    FeatureMap::new(spec.out_channels, out_len, data)
}

trait Acc:
    Copy + Default + Send + Sync + Add<Output = Self> + Mul<Output = Self> + AddAssign + 'static
{
    fn from_f32(v: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Acc for f64 {
    #[inline(always)]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    #[inline(always)]
    fn to_f32(self) -> f32 {
        self as f32
    }
}

impl Acc for f32 {
    #[inline(always)]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline(always)]
    fn to_f32(self) -> f32 {
        self
    }
}

/// Below this many multiply-adds the conv runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 18;

struct Block<'a, A> {
    /// Padded input rows of this block's group, `in_per_group x padded_len`.
    input: &'a [A],
    padded_len: usize,
    in_per_group: usize,
    kernel: usize,
    dilation: usize,
    stride: usize,
    /// Weights repacked as `[in_local][tap][block_out]`.
    weights: &'a [A],
    out_len: usize,
}

fn run<A: Acc, const L: usize>(
    x: &FeatureMap,
    spec: &ConvSpec,
    pad: usize,
    out_len: usize,
) -> Vec<f32> {
    let span = (spec.kernel - 1) * spec.dilation;
    let padded_len = ((out_len - 1) * spec.stride + span + 1).max(pad + x.time());
    let mut input = vec![A::default(); spec.in_channels * padded_len];
    for (c, row) in x.rows().enumerate() {
        let dst = &mut input[c * padded_len + pad..c * padded_len + pad + row.len()];
        for (d, &v) in dst.iter_mut().zip(row) {
            *d = A::from_f32(v);
        }
    }

    let in_pg = spec.in_per_group();
    let out_pg = spec.out_per_group();
    let block = if out_pg.is_multiple_of(4) { 4 } else { 1 };
    let mut out = vec![0.0f32; spec.out_channels * out_len];

    let compute = |(bi, chunk): (usize, &mut [f32])| {
        let o0 = bi * block;
        let group = o0 / out_pg;
        let mut weights = vec![A::default(); in_pg * spec.kernel * block];
        for il in 0..in_pg {
            for tap in 0..spec.kernel {
                for b in 0..block {
                    weights[(il * spec.kernel + tap) * block + b] =
                        A::from_f32(spec.weight_at(o0 + b, il, tap));
                }
            }
        }
        let args = Block {
            input: &input[group * in_pg * padded_len..(group + 1) * in_pg * padded_len],
            padded_len,
            in_per_group: in_pg,
            kernel: spec.kernel,
            dilation: spec.dilation,
            stride: spec.stride,
            weights: &weights,
            out_len,
        };
        let bias = &spec.bias[o0..o0 + block];
        if block == 4 {
            dispatch::<A, 4, L>(&args, bias, chunk);
        } else {
            dispatch::<A, 1, L>(&args, bias, chunk);
        }
    };

    let work = spec.out_channels * out_len * in_pg * spec.kernel;
    if work >= PARALLEL_THRESHOLD && rayon::current_num_threads() > 1 {
        out.par_chunks_mut(block * out_len)
            .enumerate()
            .for_each(compute);
    } else {
        out.chunks_mut(block * out_len)
            .enumerate()
            .for_each(compute);
    }
    out
}

fn dispatch<A: Acc, const OB: usize, const L: usize>(
    args: &Block<'_, A>,
    bias: &[f32],
    out: &mut [f32],
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked above.
            unsafe { block_kernel_avx2::<A, OB, L>(args, bias, out) };
            return;
        }
    }
    block_kernel::<A, OB, L>(args, bias, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn block_kernel_avx2<A: Acc, const OB: usize, const L: usize>(
    args: &Block<'_, A>,
    bias: &[f32],
    out: &mut [f32],
) {
    block_kernel::<A, OB, L>(args, bias, out)
}

/// Computes `OB` consecutive output rows. Accumulators for `L` time steps
/// by `OB` outputs stay in registers across the whole reduction; every
/// element sums `(in_local, tap)` in ascending order, then adds the bias.
#[inline(always)]
fn block_kernel<A: Acc, const OB: usize, const L: usize>(
    args: &Block<'_, A>,
    bias: &[f32],
    out: &mut [f32],
) {
    let Block {
        input,
        padded_len,
        in_per_group,
        kernel,
        dilation,
        stride,
        weights,
        out_len,
    } = *args;
    let mut bias_acc = [A::default(); OB];
    for (b, v) in bias_acc.iter_mut().zip(bias) {
        *b = A::from_f32(*v);
    }

    let mut t = 0;
    if stride == 1 {
        while t + L <= out_len {
            let mut acc = [[A::default(); L]; OB];
            for il in 0..in_per_group {
                let row = &input[il * padded_len..(il + 1) * padded_len];
                for tap in 0..kernel {
                    let start = t + tap * dilation;
                    let xs: &[A; L] = row[start..start + L].try_into().unwrap();
                    let w: &[A; OB] = weights[(il * kernel + tap) * OB..][..OB]
                        .try_into()
                        .unwrap();
                    for b in 0..OB {
                        for j in 0..L {
                            acc[b][j] += w[b] * xs[j];
                        }
                    }
                }
            }
            for b in 0..OB {
                let dst = &mut out[b * out_len + t..b * out_len + t + L];
                for j in 0..L {
                    dst[j] = (acc[b][j] + bias_acc[b]).to_f32();
                }
            }
            t += L;
        }
    }

    // Remaining (or strided) positions, one at a time, same reduction order.
    while t < out_len {
        let mut acc = [A::default(); OB];
        let base = t * stride;
        for il in 0..in_per_group {
            let row = &input[il * padded_len..(il + 1) * padded_len];
            for tap in 0..kernel {
                let xv = row[base + tap * dilation];
                let w = &weights[(il * kernel + tap) * OB..][..OB];
                for b in 0..OB {
                    acc[b] += w[b] * xv;
                }
            }
        }
        for b in 0..OB {
            out[b * out_len + t] = (acc[b] + bias_acc[b]).to_f32();
        }
        t += 1;
    }
}
