//! Frame-rate inputs read from disk: linguistic features (`.ling`) and F0
//! contours (`.f0`). Both are little-endian binary.
//!
//! ```text
//! .ling: "LING" | u32 hop_samples | u32 dim | u32 frames | frames x dim f32 (row-major)
//! .f0:   "F0C1" | u32 hop_samples | u32 frame_count | frame_count f32 (Hz, 0 = unvoiced)
//! ```

use std::path::Path;

use crate::dsp::F0Contour;
use crate::error::{Error, Result};
use crate::nn::FeatureMap;

const LING_MAGIC: &[u8; 4] = b"LING";
const F0_MAGIC: &[u8; 4] = b"F0C1";

/// Singer-agnostic content features, one `dim`-vector per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticFeatures {
    hop: usize,
    dim: usize,
    frames: usize,
    /// Row-major `frames x dim`.
    data: Vec<f32>,
}

impl LinguisticFeatures {
    pub fn new(hop: usize, dim: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        if hop == 0 || dim == 0 || frames == 0 {
            return Err(Error::invalid(format!(
                "linguistic features need positive hop/dim/frames, got {hop}/{dim}/{frames}"
            )));
        }
        if data.len() != frames * dim {
            return Err(Error::shape(format!(
                "{frames} frames x {dim} dims needs {} values, got {}",
                frames * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "linguistic features contain non-finite values",
            ));
        }
        Ok(Self {
            hop,
            dim,
            frames,
            data,
        })
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Transposes to a `[dim x frames]` map.
    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap::from_fn(self.dim, self.frames, |c, t| self.data[t * self.dim + c])
            .expect("non-empty by construction")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(LING_MAGIC);
        for v in [self.hop, self.dim, self.frames] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = check_header(bytes, LING_MAGIC, 16, ".ling")?;
        let (hop, dim, frames) = (header[0], header[1], header[2]);
        let values = read_f32s(&bytes[16..], frames * dim, ".ling")?;
        Self::new(hop, dim, frames, values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

impl F0Contour {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.len());
        out.extend_from_slice(F0_MAGIC);
        out.extend_from_slice(&(self.hop() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for &v in self.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = check_header(bytes, F0_MAGIC, 12, ".f0")?;
        let (hop, frames) = (header[0], header[1]);
        let values = read_f32s(&bytes[12..], frames, ".f0")?;
        F0Contour::new(values.into_iter().map(f64::from).collect(), hop)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Validates magic and length, returning the u32 fields after the magic.
fn check_header(bytes: &[u8], magic: &[u8; 4], len: usize, what: &str) -> Result<Vec<usize>> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "{what}: expected magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    if bytes.len() < len {
        return Err(Error::Format(format!("{what}: truncated header")));
    }
    Ok(bytes[4..len]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect())
}

fn read_f32s(bytes: &[u8], count: usize, what: &str) -> Result<Vec<f32>> {
    if bytes.len() != 4 * count {
        return Err(Error::Format(format!(
            "{what}: expected {} payload bytes, got {}",
            4 * count,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
