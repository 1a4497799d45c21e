//! Reference kernels written as plain loops, for checking the optimized
//! paths. Nothing here is shared with `conv.rs`.

use super::{ConvSpec, FeatureMap, Padding};
use crate::error::{Error, Result};

/// Direct convolution: one f64 sum per output element, out-of-range taps
/// skipped.
pub fn conv1d_naive(x: &FeatureMap, spec: &ConvSpec, padding: Padding) -> Result<FeatureMap> {
    spec.validate()?;
    if x.channels() != spec.in_channels {
        return Err(Error::shape(format!(
            "conv expects {} input channels, got {}",
            spec.in_channels,
            x.channels()
        )));
    }
    let time = x.time() as isize;
    let reach = ((spec.kernel - 1) * spec.dilation) as isize;
    let (left, out_len) = match padding {
        Padding::Same => {
            if spec.kernel.is_multiple_of(2) {
                return Err(Error::shape("same padding needs an odd kernel"));
            }
            (reach / 2, x.time().div_ceil(spec.stride))
        }
        Padding::Valid => {
            if time <= reach {
                return Err(Error::shape("input shorter than kernel span"));
            }
            (0, ((time - reach - 1) as usize) / spec.stride + 1)
        }
    };
    let in_pg = spec.in_channels / spec.groups;
    let out_pg = spec.out_channels / spec.groups;

    let mut data = vec![0.0f32; spec.out_channels * out_len];
    for o in 0..spec.out_channels {
        let g = o / out_pg;
        for t in 0..out_len {
            let mut sum = 0.0f64;
            for il in 0..in_pg {
                let c = g * in_pg + il;
                for k in 0..spec.kernel {
                    let idx = (t * spec.stride) as isize + (k * spec.dilation) as isize - left;
                    if idx < 0 || idx >= time {
                        continue;
                    }
                    let w = spec.weight[(o * in_pg + il) * spec.kernel + k] as f64;
                    sum += w * x.get(c, idx as usize) as f64;
                }
            }
            data[o * out_len + t] = (sum + spec.bias[o] as f64) as f32;
        }
    }
    FeatureMap::new(spec.out_channels, out_len, data)
}
