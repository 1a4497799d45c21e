use super::{FeatureMap, Matrix};
use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f32 = 0.2;
pub const INSTANCE_NORM_EPS: f64 = 1e-5;

/// Repeats every frame `factor` times.
pub fn upsample_nearest(x: &FeatureMap, factor: usize) -> Result<FeatureMap> {
    if factor == 0 {
        return Err(Error::invalid("upsample factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let time = x.time() * factor;
    let mut data = Vec::with_capacity(x.channels() * time);
    for row in x.rows() {
        for &v in row {
            data.extend(std::iter::repeat_n(v, factor));
        }
    }
    FeatureMap::new(x.channels(), time, data)
}

/// Non-overlapping mean over windows of `factor` frames. A ragged tail is
/// completed by repeating the last frame.
pub fn avg_pool(x: &FeatureMap, factor: usize) -> Result<FeatureMap> {
    if factor == 0 {
        return Err(Error::invalid("pool factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let time = x.time().div_ceil(factor);
    let mut data = Vec::with_capacity(x.channels() * time);
    for row in x.rows() {
        let last = row[row.len() - 1];
        for w in 0..time {
            let mut sum = 0.0f64;
            for j in w * factor..(w + 1) * factor {
                sum += row.get(j).copied().unwrap_or(last) as f64;
            }
            data.push((sum / factor as f64) as f32);
        }
    }
    FeatureMap::new(x.channels(), time, data)
}

pub fn leaky_relu(x: &FeatureMap, slope: f32) -> FeatureMap {
    let mut y = x.clone();
    leaky_relu_in_place(&mut y, slope);
    y
}

pub fn leaky_relu_in_place(x: &mut FeatureMap, slope: f32) {
    for v in x.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
}

/// Per-channel standardization over time, population variance, no affine.
pub fn instance_norm(x: &FeatureMap, eps: f64) -> Result<FeatureMap> {
    if x.time() < 2 {
        return Err(Error::invalid(format!(
            "instance norm needs at least 2 frames, got {}",
            x.time()
        )));
    }
    let n = x.time() as f64;
    let mut data = Vec::with_capacity(x.data().len());
    for row in x.rows() {
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        data.extend(row.iter().map(|&v| ((v as f64 - mean) * inv) as f32));
    }
    FeatureMap::new(x.channels(), x.time(), data)
}

pub fn embedding_lookup(table: &Matrix, id: usize) -> Result<Vec<f32>> {
    if id >= table.rows {
        return Err(Error::Lookup {
            index: id,
            rows: table.rows,
        });
    }
    Ok(table.row(id).to_vec())
}

/// `W x + b` with `W` of shape `[out x in]`.
pub fn linear(x: &[f32], weight: &Matrix, bias: &[f32]) -> Result<Vec<f32>> {
    if weight.cols != x.len() || weight.rows != bias.len() {
        return Err(Error::shape(format!(
            "linear {}x{} with input {} and bias {}",
            weight.rows,
            weight.cols,
            x.len(),
            bias.len()
        )));
    }
    Ok((0..weight.rows)
        .map(|r| {
            let dot: f64 = weight
                .row(r)
                .iter()
                .zip(x)
                .map(|(&w, &v)| w as f64 * v as f64)
                .sum();
            (dot + bias[r] as f64) as f32
        })
        .collect())
}

/// Mirrors `pad` frames at each end, excluding the edge frame itself.
pub fn reflect_pad(x: &FeatureMap, pad: usize) -> Result<FeatureMap> {
    if pad >= x.time() {
        return Err(Error::invalid(format!(
            "reflect pad {pad} needs more than {pad} frames, got {}",
            x.time()
        )));
    }
    let time = x.time() + 2 * pad;
    let mut data = Vec::with_capacity(x.channels() * time);
    for row in x.rows() {
        data.extend((1..=pad).rev().map(|i| row[i]));
        data.extend_from_slice(row);
        data.extend((1..=pad).map(|i| row[row.len() - 1 - i]));
    }
    FeatureMap::new(x.channels(), time, data)
}
