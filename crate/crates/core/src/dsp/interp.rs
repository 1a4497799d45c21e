use crate::error::{Error, Result};

/// Linearly interpolates a frame-rate series to `target_len` samples.
///
/// Frame `i` is anchored at sample `i * hop`. Samples past the last anchor
/// hold the last value.
pub fn upsample_linear(series: &[f64], hop: usize, target_len: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::invalid("cannot interpolate an empty series"));
    }
    if hop == 0 {
        return Err(Error::invalid("hop must be positive"));
    }
    let covered = hop * series.len();
    if target_len > covered {
        return Err(Error::Length {
            what: "interpolation target (max hop * frames)",
            expected: covered,
            actual: target_len,
        });
    }
    let last = series[series.len() - 1];
    let inv_hop = 1.0 / hop as f64;
    let mut out = Vec::with_capacity(target_len);
    for (frame, pair) in series.windows(2).enumerate() {
        let start = frame * hop;
        if start >= target_len {
            break;
        }
        let (a, b) = (pair[0], pair[1]);
        let slope = b - a;
        for j in 0..hop.min(target_len - start) {
            out.push(a + slope * (j as f64 * inv_hop));
        }
    }
    out.resize(target_len, last);
    Ok(out)
}
