//! Straight-line reference implementations used as test oracles.
//!
//! Everything here is computed in f64 on plain nested vectors, reads weights
//! by tensor name, and shares no code with the engine's kernels.

#![allow(dead_code)]

use fastsvc::discriminator::DiscriminatorConfig;
use fastsvc::generator::GeneratorConfig;
use fastsvc::{FeatureMap, WeightBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Map = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn to_map(x: &FeatureMap) -> Map {
    x.rows()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect()
}

pub fn max_abs_diff(a: &Map, b: &FeatureMap) -> f64 {
    assert_eq!(
        (a.len(), a[0].len()),
        b.shape(),
        "shape mismatch against oracle"
    );
    a.iter()
        .zip(b.rows())
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| (x - y as f64).abs()))
        .fold(0.0, f64::max)
}

pub struct RefConv<'a> {
    pub weight: &'a [f32],
    pub bias: &'a [f32],
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub groups: usize,
}

impl<'a> RefConv<'a> {
    pub fn from_bundle(bundle: &'a WeightBundle, name: &str, dilation: usize) -> Self {
        let w = bundle.tensor(&format!("{name}.weight")).unwrap();
        let b = bundle.tensor(&format!("{name}.bias")).unwrap();
        RefConv {
            weight: &w.data,
            bias: &b.data,
            out_channels: w.dims[0],
            in_channels: w.dims[1],
            kernel: w.dims[2],
            dilation,
            stride: 1,
            groups: 1,
        }
    }
}

/// Cross-correlation with `pad` zeros on the left; output length given.
pub fn conv(x: &Map, c: &RefConv, pad: usize, out_len: usize) -> Map {
    let t_in = x[0].len() as i64;
    let cin_g = c.in_channels;
    let cout_g = c.out_channels / c.groups;
    let mut y = vec![vec![0.0; out_len]; c.out_channels];
    for (o, row) in y.iter_mut().enumerate() {
        let g = o / cout_g;
        for (t, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for ci in 0..cin_g {
                for k in 0..c.kernel {
                    let idx = (t * c.stride + k * c.dilation) as i64 - pad as i64;
                    if idx >= 0 && idx < t_in {
                        let w = c.weight[(o * cin_g + ci) * c.kernel + k] as f64;
                        s += w * x[g * cin_g + ci][idx as usize];
                    }
                }
            }
            *out = s + c.bias[o] as f64;
        }
    }
    y
}

/// "Same" convolution: symmetric zero padding, `ceil(T / stride)` outputs.
pub fn conv_same(x: &Map, c: &RefConv) -> Map {
    let pad = (c.kernel - 1) * c.dilation / 2;
    let len = x[0].len().div_ceil(c.stride);
    conv(x, c, pad, len)
}

pub fn lrelu(x: &Map, slope: f64) -> Map {
    x.iter()
        .map(|r| {
            r.iter()
                .map(|&v| if v >= 0.0 { v } else { slope * v })
                .collect()
        })
        .collect()
}

pub fn upsample(x: &Map, f: usize) -> Map {
    x.iter()
        .map(|r| (0..r.len() * f).map(|t| r[t / f]).collect())
        .collect()
}

/// Mean over non-overlapping windows; positions past the end read the last
/// sample.
pub fn pool(x: &Map, f: usize) -> Map {
    x.iter()
        .map(|r| {
            (0..r.len().div_ceil(f))
                .map(|w| (0..f).map(|j| r[(w * f + j).min(r.len() - 1)]).sum::<f64>() / f as f64)
                .collect()
        })
        .collect()
}

pub fn instance_norm(x: &Map, eps: f64) -> Map {
    x.iter()
        .map(|r| {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            r.iter().map(|v| (v - mean) / (var + eps).sqrt()).collect()
        })
        .collect()
}

pub fn add(a: &Map, b: &Map) -> Map {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

/// `(gs + gl) * u + xs + xl` with gamma/xi split out of two 2C-channel maps.
pub fn affine(u: &Map, sine: &Map, loud: &Map) -> Map {
    let c = u.len();
    (0..c)
        .map(|ch| {
            (0..u[ch].len())
                .map(|t| (sine[ch][t] + loud[ch][t]) * u[ch][t] + sine[c + ch][t] + loud[c + ch][t])
                .collect()
        })
        .collect()
}

fn signal_map(x: &[f32]) -> Map {
    vec![x.iter().map(|&v| v as f64).collect()]
}

/// Conditioning maps of one branch, indexed by up-block.
pub fn branch_maps(bundle: &WeightBundle, branch: &str, signal: &[f32]) -> Map3 {
    let cfg = bundle.generator_config();
    let n = cfg.blocks();
    let slope = cfg.leaky_slope as f64;
    let mut maps = vec![Vec::new(); n];
    maps[n - 1] = conv_same(
        &signal_map(signal),
        &RefConv::from_bundle(bundle, &format!("gen.{branch}.input"), 1),
    );
    for j in (0..n - 1).rev() {
        let pooled = pool(&maps[j + 1], cfg.up_factors[j + 1]);
        let mut h = pooled.clone();
        for (m, &d) in cfg.down_dilations.iter().enumerate() {
            h = conv_same(
                &lrelu(&h, slope),
                &RefConv::from_bundle(bundle, &format!("gen.{branch}.down.{j}.conv.{m}"), d),
            );
        }
        let res = conv_same(
            &pooled,
            &RefConv::from_bundle(bundle, &format!("gen.{branch}.down.{j}.residual"), 1),
        );
        maps[j] = add(&h, &res);
    }
    maps
}

pub type Map3 = Vec<Map>;

pub fn film(bundle: &WeightBundle, branch: &str, i: usize, cond: &Map) -> Map {
    conv_same(
        cond,
        &RefConv::from_bundle(bundle, &format!("gen.{branch}.film.{i}"), 1),
    )
}

pub fn speaker_vector(bundle: &WeightBundle, id: usize, block: usize) -> Vec<f64> {
    let table = bundle.tensor("gen.speaker.table").unwrap();
    let e = table.dims[1];
    let emb = &table.data[id * e..(id + 1) * e];
    let w = bundle
        .tensor(&format!("gen.speaker.proj.{block}.weight"))
        .unwrap();
    let b = bundle
        .tensor(&format!("gen.speaker.proj.{block}.bias"))
        .unwrap();
    (0..w.dims[0])
        .map(|r| {
            (0..e)
                .map(|k| w.data[r * e + k] as f64 * emb[k] as f64)
                .sum::<f64>()
                + b.data[r] as f64
        })
        .collect()
}

/// Up-block `i` applied to `x` with pre-computed FiLM maps.
pub fn ublock(
    bundle: &WeightBundle,
    i: usize,
    x: &Map,
    sine_film: &Map,
    loud_film: &Map,
    speaker: Option<&[f64]>,
) -> Map {
    let cfg = bundle.generator_config();
    let slope = cfg.leaky_slope as f64;
    let f = cfg.up_factors[i];
    let mut h = upsample(&lrelu(x, slope), f);
    for (j, &d) in cfg.up_dilations.iter().enumerate() {
        if j > 0 {
            h = lrelu(&h, slope);
        }
        h = conv_same(
            &h,
            &RefConv::from_bundle(bundle, &format!("gen.up.{i}.conv.{j}"), d),
        );
        h = affine(&h, sine_film, loud_film);
        if let Some(v) = speaker {
            h = instance_norm(&h, 1e-5);
            for (row, s) in h.iter_mut().zip(v) {
                row.iter_mut().for_each(|e| *e += s);
            }
        }
    }
    let res = conv_same(
        &upsample(x, f),
        &RefConv::from_bundle(bundle, &format!("gen.up.{i}.residual"), 1),
    );
    add(&h, &res)
}

/// Whole generator; `ling` is `dim x frames`.
pub fn reference_generator(
    bundle: &WeightBundle,
    ling: &Map,
    excitation: &[f32],
    loudness: &[f32],
    speaker: Option<usize>,
) -> Vec<f64> {
    let cfg: &GeneratorConfig = bundle.generator_config();
    let sine = branch_maps(bundle, "sine", excitation);
    let loud = branch_maps(bundle, "loud", loudness);
    let mut h = conv_same(ling, &RefConv::from_bundle(bundle, "gen.stem", 1));
    for i in 0..cfg.blocks() {
        let s = film(bundle, "sine", i, &sine[i]);
        let l = film(bundle, "loud", i, &loud[i]);
        let v = speaker.map(|id| speaker_vector(bundle, id, i));
        h = ublock(bundle, i, &h, &s, &l, v.as_deref());
    }
    let y = conv_same(&h, &RefConv::from_bundle(bundle, "gen.head", 1));
    y[0].iter().map(|v| v.tanh()).collect()
}

/// Score maps of every sub-discriminator.
pub fn reference_discriminator(bundle: &WeightBundle, x: &[f32]) -> Vec<Vec<f64>> {
    let cfg: &DiscriminatorConfig = bundle.config().discriminator.as_ref().unwrap();
    let slope = cfg.leaky_slope as f64;
    let mut input = signal_map(x);
    let mut out = Vec::new();
    for k in 0..cfg.scales {
        if k > 0 {
            input = pool(&input, 2);
        }
        let mut h = input.clone();
        for (l, layer) in cfg.layers.iter().enumerate() {
            let w = bundle
                .tensor(&format!("disc.{k}.layer.{l}.weight"))
                .unwrap();
            let b = bundle.tensor(&format!("disc.{k}.layer.{l}.bias")).unwrap();
            let c = RefConv {
                weight: &w.data,
                bias: &b.data,
                out_channels: layer.out_channels,
                in_channels: layer.in_channels / layer.groups,
                kernel: layer.kernel,
                dilation: 1,
                stride: layer.stride,
                groups: layer.groups,
            };
            h = if layer.reflect {
                let p = (layer.kernel - 1) / 2;
                let padded: Map = h
                    .iter()
                    .map(|r| {
                        let n = r.len();
                        (0..n + 2 * p)
                            .map(|t| {
                                let i = t as i64 - p as i64;
                                let i = if i < 0 {
                                    -i
                                } else if i >= n as i64 {
                                    2 * (n as i64 - 1) - i
                                } else {
                                    i
                                };
                                r[i as usize]
                            })
                            .collect()
                    })
                    .collect();
                let len = padded[0].len() - (layer.kernel - 1);
                conv(&padded, &c, 0, len)
            } else {
                conv_same(&h, &c)
            };
            if l + 1 < cfg.layers.len() {
                h = lrelu(&h, slope);
            }
        }
        out.push(h.remove(0));
    }
    out
}

pub struct Inputs {
    pub ling: fastsvc::LinguisticFeatures,
    pub excitation: Vec<f32>,
    pub loudness: Vec<f32>,
}

impl Inputs {
    pub fn ling_map(&self) -> Map {
        to_map(&self.ling.to_feature_map())
    }
}

/// Seeded random generator inputs for `frames` linguistic frames.
pub fn random_inputs(cfg: &GeneratorConfig, frames: usize, seed: u64) -> Inputs {
    let mut r = rng(seed);
    let n = frames * cfg.linguistic_hop;
    let ling = fastsvc::LinguisticFeatures::new(
        cfg.linguistic_hop,
        cfg.linguistic_dim,
        frames,
        random_vec(&mut r, frames * cfg.linguistic_dim, 1.0),
    )
    .unwrap();
    let excitation = (0..n)
        .map(|t| 0.1 * (t as f32 * 0.07).sin() + r.gen_range(-0.01..0.01))
        .collect();
    let loudness = random_vec(&mut r, n, 1.0);
    Inputs {
        ling,
        excitation,
        loudness,
    }
}

pub fn toy_bundle(speakers: usize, discriminator: bool, seed: u64) -> WeightBundle {
    let config = fastsvc::BundleConfig {
        generator: GeneratorConfig::toy().with_speakers(speakers),
        discriminator: discriminator.then(DiscriminatorConfig::toy),
        speakers: (0..speakers).map(|i| format!("singer{i}")).collect(),
    };
    WeightBundle::random(config, seed).unwrap()
}

/// Whether `FASTSVC_BLESS` asks for golden files to be rewritten.
pub fn blessing() -> bool {
    std::env::var_os("FASTSVC_BLESS").is_some()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn f32_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f32_from_bytes(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}
