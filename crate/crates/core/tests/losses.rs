mod common;

use fastsvc::discriminator::DiscriminatorOutput;
use fastsvc::losses::{
    adv_loss, disc_loss, generator_loss, multiscale_stft_loss, multiscale_stft_report,
    stft_magnitude, LossConfig, Window,
};
use fastsvc::{AudioBuffer, FeatureMap};
use rand::Rng;

fn noise(seed: u64, n: usize) -> AudioBuffer {
    AudioBuffer::new(common::random_vec(&mut common::rng(seed), n, 0.5), 16_000).unwrap()
}

/// O(N^2) DFT magnitude of reflect-padded, Hann-windowed frames.
fn naive_stft(x: &[f32], m: usize, hop: usize) -> Vec<Vec<f64>> {
    let n = x.len() as i64;
    let half = (m / 2) as i64;
    let at = |i: i64| {
        let j = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        x[j as usize] as f64
    };
    (0..1 + x.len() / hop)
        .map(|f| {
            let frame: Vec<f64> = (0..m)
                .map(|k| {
                    let w = 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / m as f64).cos();
                    at((f * hop) as i64 - half + k as i64) * w
                })
                .collect();
            (0..=m / 2)
                .map(|b| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (k, &v) in frame.iter().enumerate() {
                        let a = -std::f64::consts::TAU * (b * k) as f64 / m as f64;
                        re += v * a.cos();
                        im += v * a.sin();
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

#[test]
fn stft_matches_naive_dft() {
    let x = noise(1, 700);
    for (m, hop) in [(64, 16), (128, 32), (256, 64)] {
        let s = stft_magnitude(&x, m, hop, Window::Hann).unwrap();
        let want = naive_stft(x.samples(), m, hop);
        assert_eq!(s.frames, want.len());
        for (f, row) in want.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert!((s.frame(f)[b] - v).abs() < 1e-9, "m {m} frame {f} bin {b}");
            }
        }
    }
}

/// From-scratch loss on the naive spectrogram.
fn reference_loss(x: &AudioBuffer, y: &AudioBuffer) -> f64 {
    let sizes = [2048, 1024, 512, 256, 128, 64];
    let mut total = 0.0;
    for m in sizes {
        let a = naive_stft(x.samples(), m, m / 4);
        let b = naive_stft(y.samples(), m, m / 4);
        let (mut num, mut den, mut log, mut count) = (0.0, 0.0, 0.0, 0.0);
        for (ra, rb) in a.iter().zip(&b) {
            for (&p, &q) in ra.iter().zip(rb) {
                num += (p - q) * (p - q);
                den += p * p;
                log += (p.max(1e-7).ln() - q.max(1e-7).ln()).abs();
                count += 1.0;
            }
        }
        total += num.sqrt() / den.sqrt() + log / count;
    }
    total / sizes.len() as f64
}

#[test]
fn random_pair_matches_reference() {
    let x = noise(2, 2500);
    let y = noise(3, 2500);
    let got = multiscale_stft_loss(&x, &y, &LossConfig::default()).unwrap();
    let want = reference_loss(&x, &y);
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn identity_and_scaling() {
    let c = LossConfig::default();
    let x = noise(4, 16_000);
    assert!(multiscale_stft_loss(&x, &x, &c).unwrap() <= 1e-6);
    let y = x.scaled(2.0).unwrap();
    let r = multiscale_stft_report(&x, &y, &c).unwrap();
    assert!((r.total - (1.0 + 2f64.ln())).abs() < 1e-3, "{}", r.total);
    for s in &r.scales {
        assert!((s.spectral_convergence - 1.0).abs() < 1e-9);
        assert!((s.log_magnitude - 2f64.ln()).abs() < 1e-3);
    }
}

fn maps(seed: u64, lens: &[usize], scale: f32) -> DiscriminatorOutput {
    let mut r = common::rng(seed);
    DiscriminatorOutput {
        score_maps: lens
            .iter()
            .map(|&n| FeatureMap::new(1, n, common::random_vec(&mut r, n, scale)).unwrap())
            .collect(),
    }
}

#[test]
fn adversarial_terms_match_formulas() {
    let real = maps(5, &[40, 20, 10], 1.0);
    let fake = maps(6, &[40, 20, 10], 1.0);
    let rms = |m: &FeatureMap, f: &dyn Fn(f64) -> f64| {
        (m.data().iter().map(|&v| f(v as f64).powi(2)).sum::<f64>() / m.data().len() as f64).sqrt()
    };
    let adv: f64 = fake
        .score_maps
        .iter()
        .map(|m| rms(m, &|v| 1.0 - v))
        .sum::<f64>()
        / 3.0;
    assert!((adv_loss(&fake) - adv).abs() < 1e-12);
    let d: f64 = real
        .score_maps
        .iter()
        .zip(&fake.score_maps)
        .map(|(r, f)| rms(r, &|v| 1.0 - v) + rms(f, &|v| v))
        .sum::<f64>()
        / 3.0;
    assert!((disc_loss(&real, &fake).unwrap() - d).abs() < 1e-12);
    let short = maps(7, &[40, 20], 1.0);
    assert_eq!(disc_loss(&real, &short).unwrap_err().kind(), "shape");
}

#[test]
fn generator_loss_is_exact() {
    let mut r = common::rng(8);
    for _ in 0..100 {
        let (s, a): (f64, f64) = (r.gen_range(0.0..10.0), r.gen_range(0.0..10.0));
        assert_eq!(generator_loss(s, a, 2.5), s + 2.5 * a);
    }
}
