use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{LayerParams, LayerSpec, ModelParams, NetworkSpec, Tensor};
use crate::codec::Standardizer;
use crate::vision::CropRegion;
use crate::Result;

/// Default multiplier applied to standardized targets: about 99.7% of a
/// unit-variance target lands inside tanh's (-1, 1).
pub const DEFAULT_TARGET_SCALE: f64 = 1.0 / 3.0;

/// He-normal initialization: weights ~ N(0, 2 / fan_in), biases zero. Each
/// layer draws from its own stream so the result depends only on `seed`
/// and the spec.
pub fn he_init(spec: &NetworkSpec, seed: u64) -> Result<ModelParams> {
    let shapes = spec.shapes()?;
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut input: Vec<usize> = spec.input.to_vec();
    for (i, (layer, out)) in spec.layers.iter().zip(&shapes).enumerate() {
        let entry = match *layer {
            LayerSpec::Conv3x3 { out_channels } => {
                let fan_in = input[0] * 9;
                Some(sample(
                    &[out_channels, input[0], 3, 3],
                    out_channels,
                    fan_in,
                    seed,
                    i,
                ))
            }
            LayerSpec::Dense { out_dim } => {
                let fan_in = input[0];
                Some(sample(&[out_dim, fan_in], out_dim, fan_in, seed, i))
            }
            _ => None,
        };
        layers.push(entry);
        input = out.clone();
    }
    let zeros: Vec<Option<LayerParams>> = layers
        .iter()
        .map(|l| l.as_ref().map(LayerParams::zeros_like))
        .collect();
    Ok(ModelParams {
        spec: spec.clone(),
        layers,
        first_moment: zeros.clone(),
        second_moment: zeros,
        step: 0,
        standardizer: Standardizer::identity(),
        target_scale: DEFAULT_TARGET_SCALE,
        crop: CropRegion::FullFace,
    })
}

fn sample(shape: &[usize], out: usize, fan_in: usize, seed: u64, layer: usize) -> LayerParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64 + 1);
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
    LayerParams {
        weight: Tensor::from_vec(shape, data).expect("shape matches"),
        bias: Tensor::zeros(&[out]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_fan_in_2048_std() {
        let spec = NetworkSpec::full(1);
        let params = he_init(&spec, 3).unwrap();
        let flat = spec.layers.iter().position(|l| matches!(l, LayerSpec::Flatten)).unwrap();
        let dense = params.layers[flat + 1].as_ref().unwrap();
        assert_eq!(dense.weight.shape(), &[512, 2048]);
        let w = dense.weight.data();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let std = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        let expect = (2.0f64 / 2048.0).sqrt();
        assert!((std / expect - 1.0).abs() < 0.05, "std {std} vs {expect}");
    }

    #[test]
    fn biases_are_zero_and_seed_is_deterministic() {
        let spec = NetworkSpec::vgg(3, 16, &[4, 4], 8, 2, 0.01, 0.25, 0.5);
        let a = he_init(&spec, 11).unwrap();
        assert!(a.layers.iter().flatten().all(|l| l.bias.data().iter().all(|&b| b == 0.0)));
        assert_eq!(a, he_init(&spec, 11).unwrap());
        assert_ne!(a, he_init(&spec, 12).unwrap());
        assert_eq!(a.step, 0);
    }

    #[test]
    fn conv_fan_in_uses_channels_times_taps() {
        let spec = NetworkSpec::vgg(9, 128, &[64], 8, 2, 0.01, 0.0, 0.0);
        let p = he_init(&spec, 0).unwrap();
        // second conv: fan_in 64 * 9 = 576, 64*64*9 = 36864 samples
        let w = p.layers[2].as_ref().unwrap().weight.data();
        let std = (w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64).sqrt();
        assert!((std / (2.0f64 / 576.0).sqrt() - 1.0).abs() < 0.05);
    }
}
