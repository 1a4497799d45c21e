mod common;

use fastsvc::discriminator::{discriminator_forward, Discriminator, DiscriminatorConfig};
use fastsvc::{AudioBuffer, Precision};

#[test]
fn toy_discriminator_matches_reference() {
    let bundle = common::toy_bundle(0, true, 31);
    let x = AudioBuffer::new(common::random_vec(&mut common::rng(32), 6000, 0.8), 16_000).unwrap();
    let got = discriminator_forward(&x, &bundle, Precision::Strict).unwrap();
    let want = common::reference_discriminator(&bundle, x.samples());
    assert_eq!(got.score_maps.len(), 3);
    for (k, (g, w)) in got.score_maps.iter().zip(&want).enumerate() {
        assert_eq!(g.shape(), (1, w.len()), "scale {k}");
        let d = g
            .data()
            .iter()
            .zip(w)
            .map(|(&a, &b)| (a as f64 - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-5, "scale {k}: {d}");
    }
}

#[test]
fn score_map_lengths_follow_strides() {
    let bundle = common::toy_bundle(0, true, 1);
    let d = Discriminator::from_bundle(&bundle).unwrap();
    let x = AudioBuffer::new(vec![0.1; 16_000], 16_000).unwrap();
    let out = d.forward(&x, Precision::Fast).unwrap();
    let lens: Vec<usize> = out.score_maps.iter().map(|m| m.time()).collect();
    // four stride-4 layers: ceil(n / 256) at n = 16000, 8000, 4000
    assert_eq!(lens, vec![63, 32, 16]);
}

#[test]
fn errors() {
    let gen_only = common::toy_bundle(0, false, 1);
    let x = AudioBuffer::new(vec![0.0; 6000], 16_000).unwrap();
    assert_eq!(
        discriminator_forward(&x, &gen_only, Precision::Strict)
            .unwrap_err()
            .kind(),
        "capability"
    );
    let bundle = common::toy_bundle(0, true, 1);
    let min = DiscriminatorConfig::toy().receptive_field();
    let short = AudioBuffer::new(vec![0.0; min - 1], 16_000).unwrap();
    assert_eq!(
        discriminator_forward(&short, &bundle, Precision::Strict)
            .unwrap_err()
            .kind(),
        "length"
    );
    let ok = AudioBuffer::new(vec![0.0; min], 16_000).unwrap();
    assert!(discriminator_forward(&ok, &bundle, Precision::Strict).is_ok());
}

#[test]
fn full_size_layout() {
    let c = DiscriminatorConfig::default();
    let groups: Vec<usize> = c.layers.iter().map(|l| l.groups).collect();
    assert_eq!(groups, vec![1, 4, 16, 64, 256, 1, 1]);
    assert!((16_000_000..18_000_000).contains(&c.param_count()));
}
