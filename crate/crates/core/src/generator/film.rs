use crate::error::{Error, Result};
use crate::nn::{conv1d_with, ConvSpec, FeatureMap, Padding, Precision};

/// Scale and shift maps produced by one FiLM module.
#[derive(Debug, Clone, PartialEq)]
pub struct FiLMOutput {
    pub gamma: FeatureMap,
    pub xi: FeatureMap,
}

/// One conv producing `2C` channels; the first `C` are the scale, the rest
/// the shift.
pub fn film_forward(
    cond: &FeatureMap,
    conv: &ConvSpec,
    precision: Precision,
) -> Result<FiLMOutput> {
    if !conv.out_channels.is_multiple_of(2) {
        return Err(Error::shape(format!(
            "FiLM conv needs an even output count, got {}",
            conv.out_channels
        )));
    }
    let y = conv1d_with(cond, conv, Padding::Same, precision)?;
    let (c, t) = (conv.out_channels / 2, y.time());
    let mut data = y.into_data();
    let xi = data.split_off(c * t);
    Ok(FiLMOutput {
        gamma: FeatureMap::new(c, t, data)?,
        xi: FeatureMap::new(c, t, xi)?,
    })
}

/// `(gamma_sine + gamma_loud) * u + xi_sine + xi_loud`, elementwise.
pub fn feature_affine(u: &FeatureMap, sine: &FiLMOutput, loud: &FiLMOutput) -> Result<FeatureMap> {
    let shape = u.shape();
    for (what, m) in [
        ("sine gamma", &sine.gamma),
        ("sine xi", &sine.xi),
        ("loudness gamma", &loud.gamma),
        ("loudness xi", &loud.xi),
    ] {
        if m.shape() != shape {
            return Err(Error::shape(format!(
                "{what} is {:?}, modulated map is {shape:?}",
                m.shape()
            )));
        }
    }
    let data = u
        .data()
        .iter()
        .zip(sine.gamma.data())
        .zip(loud.gamma.data())
        .zip(sine.xi.data().iter().zip(loud.xi.data()))
        .map(|(((&x, &gs), &gl), (&xs, &xl))| (gs + gl) * x + xs + xl)
        .collect();
    FeatureMap::new(shape.0, shape.1, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: usize, t: usize, v: f32) -> FeatureMap {
        FeatureMap::new(c, t, vec![v; c * t]).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_film() {
        let cond = FeatureMap::from_fn(3, 10, |c, t| (c * t) as f32 - 4.0).unwrap();
        let out = film_forward(&cond, &ConvSpec::zeros(3, 6, 3), Precision::Strict).unwrap();
        assert!(out
            .gamma
            .data()
            .iter()
            .chain(out.xi.data())
            .all(|&v| v == 0.0));
        assert_eq!(out.gamma.shape(), (3, 10));
    }

    #[test]
    fn bias_only_film_is_constant() {
        let cond = FeatureMap::from_fn(2, 7, |c, t| (c + t) as f32).unwrap();
        let mut conv = ConvSpec::zeros(2, 4, 3);
        conv.bias = vec![1.5, -2.0, 0.25, 3.0];
        let out = film_forward(&cond, &conv, Precision::Strict).unwrap();
        assert!(out.gamma.row(0).iter().all(|&v| v == 1.5));
        assert!(out.gamma.row(1).iter().all(|&v| v == -2.0));
        assert!(out.xi.row(0).iter().all(|&v| v == 0.25));
        assert!(out.xi.row(1).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn affine_identity_and_shift_only() {
        let u = FeatureMap::from_fn(2, 5, |c, t| c as f32 * 10.0 - t as f32).unwrap();
        let one = FiLMOutput {
            gamma: constant(2, 5, 1.0),
            xi: constant(2, 5, 0.0),
        };
        let zero = FiLMOutput {
            gamma: constant(2, 5, 0.0),
            xi: constant(2, 5, 0.0),
        };
        assert_eq!(feature_affine(&u, &one, &zero).unwrap(), u);

        let s = FiLMOutput {
            gamma: constant(2, 5, 0.0),
            xi: constant(2, 5, 2.0),
        };
        let l = FiLMOutput {
            gamma: constant(2, 5, 0.0),
            xi: constant(2, 5, -0.5),
        };
        let y = feature_affine(&u, &s, &l).unwrap();
        assert!(y.data().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn affine_shape_mismatch() {
        let u = constant(2, 5, 1.0);
        let ok = FiLMOutput {
            gamma: constant(2, 5, 1.0),
            xi: constant(2, 5, 0.0),
        };
        let bad = FiLMOutput {
            gamma: constant(2, 4, 1.0),
            xi: constant(2, 4, 0.0),
        };
        assert_eq!(feature_affine(&u, &ok, &bad).unwrap_err().kind(), "shape");
    }
}
