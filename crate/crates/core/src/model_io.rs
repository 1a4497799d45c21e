//! The `.fsvc` weight bundle: one little-endian file holding the model
//! config and every named tensor.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FSVC"
//! 4       4     u32 format_version (1)
//! 8       4     u32 config_json_length
//! 12      4     u32 tensor_count
//! 16      4     u32 CRC-32 of bytes [0, 16) followed by bytes [20, EOF)
//! 20      J     config JSON, UTF-8
//!         ...   tensor table, sorted by name, one record per tensor:
//!                 u32 name_len, name bytes, u32 dtype (0 = f32),
//!                 u32 rank, rank x u32 dims, u64 payload byte offset
//!         ...   payload: tensors in table order, contiguous f32
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::discriminator::DiscriminatorConfig;
use crate::error::{Error, Result};
use crate::generator::{self, GeneratorConfig};

pub const MAGIC: [u8; 4] = *b"FSVC";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
const DTYPE_F32: u32 = 0;

/// Name prefix of every discriminator tensor.
pub const DISC_PREFIX: &str = "disc.";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "tensor dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: vec![0.0; n],
        }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Everything in the bundle besides tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub generator: GeneratorConfig,
    /// Present iff the bundle carries discriminator tensors.
    #[serde(default)]
    pub discriminator: Option<DiscriminatorConfig>,
    /// Speaker names, in table order. Empty means "address by index".
    #[serde(default)]
    pub speakers: Vec<String>,
}

impl BundleConfig {
    pub fn generator_only(generator: GeneratorConfig) -> Self {
        Self {
            generator,
            discriminator: None,
            speakers: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if let Some(d) = &self.discriminator {
            d.validate()?;
        }
        if !self.speakers.is_empty() && self.speakers.len() != self.generator.speaker_count {
            return Err(Error::config(
                "speakers",
                format!(
                    "{} names for speaker_count {}",
                    self.speakers.len(),
                    self.generator.speaker_count
                ),
            ));
        }
        Ok(())
    }

    /// Every tensor the config requires, in schema order.
    pub fn expected_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut shapes = generator::tensor_shapes(&self.generator);
        if let Some(d) = &self.discriminator {
            shapes.extend(d.tensor_shapes());
        }
        shapes
    }

    /// Resolves a speaker by name, falling back to a numeric index.
    pub fn resolve_speaker(&self, key: &str) -> Result<usize> {
        if let Some(i) = self.speakers.iter().position(|s| s == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.generator.speaker_count => Ok(i),
            _ => Err(Error::UnknownSpeaker(key.to_string())),
        }
    }
}

/// Config plus named tensors. Immutable once built; share it freely.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    config: BundleConfig,
    tensors: BTreeMap<String, Tensor>,
}

impl WeightBundle {
    /// Builds a bundle, checking the tensor set against the config.
    pub fn new(config: BundleConfig, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        config.validate()?;
        check_tensor_set(&config, &tensors)?;
        Ok(Self { config, tensors })
    }

    /// Seeded random weights: N(0, 1/fan_in) for weights, N(0, 0.05^2) for
    /// biases, N(0, 1) for the speaker table.
    pub fn random(config: BundleConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, dims) in config.expected_shapes() {
            let std = if name.ends_with(".bias") {
                0.05
            } else if name.ends_with("speaker.table") {
                1.0
            } else {
                let fan_in: usize = dims[1..].iter().product();
                1.0 / (fan_in.max(1) as f64).sqrt()
            };
            let normal = Normal::new(0.0, std).expect("finite std");
            let n: usize = dims.iter().product();
            let data = (0..n).map(|_| normal.sample(&mut rng) as f32).collect();
            tensors.insert(name, Tensor { dims, data });
        }
        Self::new(config, tensors)
    }

    /// All-zero weights.
    pub fn zeros(config: BundleConfig) -> Result<Self> {
        let tensors = config
            .expected_shapes()
            .into_iter()
            .map(|(name, dims)| (name, Tensor::zeros(dims)))
            .collect();
        Self::new(config, tensors)
    }

    pub fn config(&self) -> &BundleConfig {
        &self.config
    }

    pub fn generator_config(&self) -> &GeneratorConfig {
        &self.config.generator
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Validation(vec![format!("missing tensor {name}")]))
    }

    pub fn has_discriminator(&self) -> bool {
        self.config.discriminator.is_some()
    }

    /// Returns a copy with the discriminator removed.
    pub fn without_discriminator(&self) -> Self {
        let mut config = self.config.clone();
        config.discriminator = None;
        let tensors = self
            .tensors
            .iter()
            .filter(|(k, _)| !k.starts_with(DISC_PREFIX))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self { config, tensors }
    }

    /// Replaces one tensor's data, keeping its shape.
    pub fn with_tensor_data(&self, name: &str, data: Vec<f32>) -> Result<Self> {
        let mut out = self.clone();
        let t = out
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::Validation(vec![format!("missing tensor {name}")]))?;
        if t.data.len() != data.len() {
            return Err(Error::shape(format!(
                "{name}: expected {} values, got {}",
                t.data.len(),
                data.len()
            )));
        }
        t.data = data;
        Ok(out)
    }

    pub fn format_version(&self) -> u32 {
        FORMAT_VERSION
    }

    /// CRC-32 the file would carry.
    pub fn checksum(&self) -> u32 {
        let bytes = self.to_bytes();
        u32::from_le_bytes(bytes[16..20].try_into().unwrap())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        let mut table = Vec::new();
        let mut offset = 0u64;
        for (name, t) in &self.tensors {
            table.extend_from_slice(&(name.len() as u32).to_le_bytes());
            table.extend_from_slice(name.as_bytes());
            table.extend_from_slice(&DTYPE_F32.to_le_bytes());
            table.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for &d in &t.dims {
                table.extend_from_slice(&(d as u32).to_le_bytes());
            }
            table.extend_from_slice(&offset.to_le_bytes());
            offset += 4 * t.data.len() as u64;
        }

        let mut out = Vec::with_capacity(HEADER_LEN + json.len() + table.len() + offset as usize);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        out.extend_from_slice(&[0; 4]);
        out.extend_from_slice(&json);
        out.extend_from_slice(&table);
        for t in self.tensors.values() {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = file_crc(&out);
        out[16..20].copy_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::Format("missing FSVC magic".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Checksum(format!(
                "truncated header ({} of {HEADER_LEN} bytes)",
                bytes.len()
            )));
        }
        let mut r = Reader::new(bytes, 4);
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let json_len = r.u32()? as usize;
        let count = r.u32()? as usize;
        let stored = r.u32()?;
        let actual = file_crc(bytes);
        if stored != actual {
            return Err(Error::Checksum(format!(
                "stored {stored:#010x}, computed {actual:#010x}"
            )));
        }

        let config: BundleConfig = serde_json::from_slice(r.take(json_len)?)?;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
                .to_string();
            let dtype = r.u32()?;
            if dtype != DTYPE_F32 {
                return Err(Error::Format(format!("{name}: unsupported dtype {dtype}")));
            }
            let rank = r.u32()? as usize;
            let dims = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let offset = r.u64()? as usize;
            records.push((name, dims, offset));
        }

        let payload = &bytes[r.pos..];
        let mut tensors = BTreeMap::new();
        let mut expected_offset = 0usize;
        for (name, dims, offset) in records {
            let n: usize = dims.iter().product();
            if offset != expected_offset {
                return Err(Error::Format(format!(
                    "{name}: payload offset {offset}, expected {expected_offset}"
                )));
            }
            let span = payload
                .get(offset..offset + 4 * n)
                .ok_or_else(|| Error::Format(format!("{name}: payload out of bounds")))?;
            let data = span
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            expected_offset += 4 * n;
            if tensors
                .insert(name.clone(), Tensor { dims, data })
                .is_some()
            {
                return Err(Error::Format(format!("duplicate tensor {name}")));
            }
        }
        if expected_offset != payload.len() {
            return Err(Error::Format(format!(
                "{} trailing payload bytes",
                payload.len() - expected_offset
            )));
        }
        Self::new(config, tensors)
    }
}

fn file_crc(bytes: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(&bytes[..16]);
    h.update(&bytes[HEADER_LEN..]);
    h.finalize()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], pos: usize) -> Self {
        Self { bytes, pos }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Lists every missing, unexpected or misshaped tensor.
fn check_tensor_set(config: &BundleConfig, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
    let expected = config.expected_shapes();
    let mut problems = Vec::new();
    for (name, dims) in &expected {
        match tensors.get(name) {
            None => problems.push(format!("missing tensor {name} {dims:?}")),
            Some(t) if &t.dims != dims => problems.push(format!(
                "tensor {name} has shape {:?}, expected {dims:?}",
                t.dims
            )),
            Some(t) if t.data.len() != dims.iter().product::<usize>() => {
                problems.push(format!("tensor {name} has {} values", t.data.len()))
            }
            Some(_) => {}
        }
    }
    let known: std::collections::HashSet<&str> = expected.iter().map(|(n, _)| n.as_str()).collect();
    for name in tensors.keys() {
        if !known.contains(name.as_str()) {
            problems.push(format!("unexpected tensor {name}"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

pub fn save_bundle(bundle: &WeightBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bundle.to_bytes())?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<WeightBundle> {
    WeightBundle::from_bytes(&std::fs::read(path)?)
}

/// Capabilities and per-section parameter counts of a loaded bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundleReport {
    pub format_version: u32,
    pub has_generator: bool,
    pub has_discriminator: bool,
    pub has_speaker_table: bool,
    pub speakers: Vec<String>,
    /// Generator elements, speaker path included.
    pub generator_params: usize,
    pub speaker_params: usize,
    pub discriminator_params: usize,
}

/// Summarizes what a bundle can do, counting the tensors it actually holds.
pub fn validate_bundle(bundle: &WeightBundle) -> BundleReport {
    let mut report = BundleReport {
        format_version: FORMAT_VERSION,
        has_generator: false,
        has_discriminator: false,
        has_speaker_table: false,
        speakers: bundle.config.speakers.clone(),
        generator_params: 0,
        speaker_params: 0,
        discriminator_params: 0,
    };
    for (name, t) in &bundle.tensors {
        if name.starts_with(DISC_PREFIX) {
            report.discriminator_params += t.numel();
        } else {
            report.generator_params += t.numel();
            if name.starts_with(generator::SPEAKER_PREFIX) {
                report.speaker_params += t.numel();
            }
        }
    }
    report.has_generator = report.generator_params > report.speaker_params;
    report.has_discriminator = report.discriminator_params > 0;
    report.has_speaker_table = bundle.tensors.contains_key(generator::SPEAKER_TABLE);
    if report.speakers.is_empty() {
        report.speakers = (0..bundle.config.generator.speaker_count)
            .map(|i| i.to_string())
            .collect();
    }
    report
}
