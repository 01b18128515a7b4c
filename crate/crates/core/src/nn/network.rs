use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    conv3x3_backward, conv3x3_forward, dense_backward, dense_forward, maxpool_backward,
    maxpool_forward, ConvDims,
};
use super::{Gradients, LayerParams, LayerSpec, ModelParams, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Deterministic inference; dropout is the identity.
    Eval,
    /// Dropout active, masks drawn from `dropout_seed`.
    Train { dropout_seed: u64 },
}

#[derive(Debug, Clone)]
enum Aux {
    None,
    Argmax(Vec<u32>),
    Mask(Vec<f64>),
    /// tanh output, reused for its derivative
    Output(Vec<f64>),
}

/// Layer inputs and auxiliary state recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `inputs[i]` is the input of layer `i`, per-sample shapes as in the `NetworkSpec`
    inputs: Vec<Vec<f64>>,
    aux: Vec<Aux>,
}

fn check_input(params: &ModelParams, input: &Tensor) -> Result<usize> {
    let want = params.spec.input;
    let shape = input.shape();
    if shape.len() != 4 || shape[1..] != want {
        return Err(Error::Shape(format!(
            "network expects B×{}×{}×{} input, got {shape:?}",
            want[0], want[1], want[2]
        )));
    }
    Ok(shape[0])
}

fn dropout_mask(len: usize, rate: f64, seed: u64, layer: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64 + 1);
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

fn run(params: &ModelParams, input: &Tensor, mode: Mode, keep: bool) -> Result<(Tensor, Option<ForwardCache>)> {
    let batch = check_input(params, input)?;
    let spec = &params.spec;
    let shapes = spec.shapes()?;
    let mut cur: Vec<f64> = input.data().to_vec();
    let mut cur_shape: Vec<usize> = spec.input.to_vec();
    let mut inputs = Vec::new();
    let mut aux = Vec::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        let (next, extra) = match *layer {
            LayerSpec::Conv3x3 { out_channels } => {
                let p = params.layers[i].as_ref().expect("conv params");
                let d = ConvDims {
                    batch,
                    in_ch: cur_shape[0],
                    out_ch: out_channels,
                    h: cur_shape[1],
                    w: cur_shape[2],
                };
                (conv3x3_forward(&cur, p.weight.data(), p.bias.data(), &d), Aux::None)
            }
            LayerSpec::MaxPool2 => {
                let (o, arg) = maxpool_forward(&cur, batch * cur_shape[0], cur_shape[1], cur_shape[2]);
                (o, if keep { Aux::Argmax(arg) } else { Aux::None })
            }
            LayerSpec::Dense { .. } => {
                let p = params.layers[i].as_ref().expect("dense params");
                (dense_forward(&cur, p.weight.data(), p.bias.data(), batch, cur_shape[0]), Aux::None)
            }
            LayerSpec::LeakyRelu { slope } => {
                let o = cur.iter().map(|&v| if v > 0.0 { v } else { slope * v }).collect();
                (o, Aux::None)
            }
            LayerSpec::Tanh => {
                let o: Vec<f64> = cur.iter().map(|v| v.tanh()).collect();
                let a = if keep { Aux::Output(o.clone()) } else { Aux::None };
                (o, a)
            }
            LayerSpec::Dropout { rate } => match mode {
                Mode::Train { dropout_seed } if rate > 0.0 => {
                    let mask = dropout_mask(cur.len(), rate, dropout_seed, i);
                    let o = cur.iter().zip(&mask).map(|(v, m)| v * m).collect();
                    (o, Aux::Mask(mask))
                }
                _ => (cur.clone(), Aux::None),
            },
            LayerSpec::Flatten => (cur.clone(), Aux::None),
        };
        if keep {
            inputs.push(std::mem::replace(&mut cur, next));
            aux.push(extra);
        } else {
            cur = next;
        }
        cur_shape = shapes[i].clone();
    }
    let mut out_shape = vec![batch];
    out_shape.extend(&cur_shape);
    let out = Tensor::from_vec(&out_shape, cur)?;
    let cache = keep.then_some(ForwardCache { batch, inputs, aux });
    Ok((out, cache))
}

/// Forward pass returning the outputs and the cache for [`backward`].
pub fn forward(params: &ModelParams, input: &Tensor, mode: Mode) -> Result<(Tensor, ForwardCache)> {
    let (out, cache) = run(params, input, mode, true)?;
    Ok((out, cache.expect("cache requested")))
}

/// Eval-mode forward pass without keeping activations.
pub fn predict(params: &ModelParams, input: &Tensor) -> Result<Tensor> {
    Ok(run(params, input, Mode::Eval, false)?.0)
}

/// Backpropagate `loss_grad` (gradient w.r.t. the network output) through
/// the cached forward pass.
pub fn backward(params: &ModelParams, cache: &ForwardCache, loss_grad: &Tensor) -> Result<Gradients> {
    Ok(backward_with_input(params, cache, loss_grad)?.0)
}

/// As [`backward`], also returning the gradient w.r.t. the network input.
pub(crate) fn backward_with_input(
    params: &ModelParams,
    cache: &ForwardCache,
    loss_grad: &Tensor,
) -> Result<(Gradients, Vec<f64>)> {
    let spec = &params.spec;
    let shapes = spec.shapes()?;
    let batch = cache.batch;
    let out_len: usize = shapes.last().map(|s| s.iter().product()).unwrap_or(0);
    if loss_grad.len() != batch * out_len {
        return Err(Error::Shape(format!(
            "loss gradient has {} elements, expected {}",
            loss_grad.len(),
            batch * out_len
        )));
    }
    let mut grads = Gradients::zeros_like(params);
    let mut g: Vec<f64> = loss_grad.data().to_vec();
    for i in (0..spec.layers.len()).rev() {
        let x = &cache.inputs[i];
        let in_shape: &[usize] = if i == 0 { &spec.input } else { &shapes[i - 1] };
        g = match (spec.layers[i], &cache.aux[i]) {
            (LayerSpec::Conv3x3 { out_channels }, _) => {
                let p = params.layers[i].as_ref().expect("conv params");
                let d = ConvDims {
                    batch,
                    in_ch: in_shape[0],
                    out_ch: out_channels,
                    h: in_shape[1],
                    w: in_shape[2],
                };
                let (gx, gw, gb) = conv3x3_backward(x, p.weight.data(), &g, &d);
                store(&mut grads, i, p, gw, gb)?;
                gx
            }
            (LayerSpec::MaxPool2, Aux::Argmax(arg)) => maxpool_backward(&g, arg, x.len()),
            (LayerSpec::Dense { .. }, _) => {
                let p = params.layers[i].as_ref().expect("dense params");
                let (gx, gw, gb) = dense_backward(x, p.weight.data(), &g, batch, in_shape[0]);
                store(&mut grads, i, p, gw, gb)?;
                gx
            }
            (LayerSpec::LeakyRelu { slope }, _) => g
                .iter()
                .zip(x)
                .map(|(gv, &xv)| if xv > 0.0 { *gv } else { slope * gv })
                .collect(),
            (LayerSpec::Tanh, Aux::Output(y)) => g
                .iter()
                .zip(y)
                .map(|(gv, yv)| gv * (1.0 - yv * yv))
                .collect(),
            (LayerSpec::Dropout { .. }, Aux::Mask(mask)) => {
                g.iter().zip(mask).map(|(gv, m)| gv * m).collect()
            }
            (LayerSpec::Dropout { .. }, Aux::None) | (LayerSpec::Flatten, _) => g,
            (layer, _) => {
                return Err(Error::Shape(format!(
                    "cache for layer {i} ({layer}) was not recorded in training form"
                )))
            }
        };
    }
    Ok((grads, g))
}

fn store(grads: &mut Gradients, i: usize, p: &LayerParams, gw: Vec<f64>, gb: Vec<f64>) -> Result<()> {
    grads.layers[i] = Some(LayerParams {
        weight: Tensor::from_vec(p.weight.shape(), gw)?,
        bias: Tensor::from_vec(p.bias.shape(), gb)?,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{he_init, mse_loss, NetworkSpec};
    use rand_distr::{Distribution, StandardNormal};

    const H: f64 = 1e-5;

    fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn randomize(params: &mut ModelParams, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in params.layers.iter_mut().flatten() {
            for x in l.weight.data_mut().iter_mut().chain(l.bias.data_mut()) {
                let n: f64 = StandardNormal.sample(&mut rng);
                *x = 0.5 * n;
            }
        }
    }

    /// Scalar objective sum(c * y); its output gradient is `c`.
    fn objective(params: &ModelParams, x: &Tensor, mode: Mode, c: &[f64]) -> f64 {
        let (y, _) = forward(params, x, mode).unwrap();
        y.data().iter().zip(c).map(|(a, b)| a * b).sum()
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    }

    /// Compares analytic and central-difference gradients for every
    /// parameter and every input element; returns the worst relative error.
    fn gradient_check(spec: NetworkSpec, batch: usize, mode: Mode, seed: u64) -> f64 {
        let mut params = he_init(&spec, seed).unwrap();
        randomize(&mut params, seed + 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
        let mut shape = vec![batch];
        shape.extend(spec.input);
        let x = Tensor::from_vec(&shape, randn(&mut rng, shape.iter().product())).unwrap();
        let out_len = batch * spec.output_dim().unwrap();
        let c = randn(&mut rng, out_len);
        let ct = Tensor::from_vec(&[out_len], c.clone()).unwrap();

        let (_, cache) = forward(&params, &x, mode).unwrap();
        let (grads, gx) = backward_with_input(&params, &cache, &ct).unwrap();
        let mut worst: f64 = 0.0;

        for li in 0..params.layers.len() {
            if params.layers[li].is_none() {
                continue;
            }
            for which in 0..2 {
                let len = {
                    let l = params.layers[li].as_ref().unwrap();
                    if which == 0 { l.weight.len() } else { l.bias.len() }
                };
                for j in 0..len {
                    let probe = |delta: f64| {
                        let mut p = params.clone();
                        let l = p.layers[li].as_mut().unwrap();
                        let t = if which == 0 { &mut l.weight } else { &mut l.bias };
                        t.data_mut()[j] += delta;
                        objective(&p, &x, mode, &c)
                    };
                    let num = (probe(H) - probe(-H)) / (2.0 * H);
                    let g = grads.layers[li].as_ref().unwrap();
                    let ana = if which == 0 { g.weight.data()[j] } else { g.bias.data()[j] };
                    worst = worst.max(rel_err(ana, num));
                }
            }
        }
        for j in 0..x.len() {
            let probe = |delta: f64| {
                let mut xp = x.clone();
                xp.data_mut()[j] += delta;
                objective(&params, &xp, mode, &c)
            };
            let num = (probe(H) - probe(-H)) / (2.0 * H);
            worst = worst.max(rel_err(gx[j], num));
        }
        worst
    }

    fn single(input: [usize; 3], layers: Vec<LayerSpec>) -> NetworkSpec {
        NetworkSpec { input, layers }
    }

    #[test]
    fn gradient_conv() {
        let s = single([2, 5, 4], vec![LayerSpec::Conv3x3 { out_channels: 3 }]);
        assert!(gradient_check(s, 2, Mode::Eval, 1) < 1e-5);
    }

    #[test]
    fn gradient_dense() {
        let s = single([6, 1, 1], vec![LayerSpec::Flatten, LayerSpec::Dense { out_dim: 4 }]);
        assert!(gradient_check(s, 3, Mode::Eval, 2) < 1e-5);
    }

    #[test]
    fn gradient_pool() {
        let s = single([2, 4, 6], vec![LayerSpec::MaxPool2]);
        assert!(gradient_check(s, 2, Mode::Eval, 3) < 1e-5);
    }

    #[test]
    fn gradient_activations() {
        let s = single([3, 2, 2], vec![LayerSpec::LeakyRelu { slope: 0.01 }]);
        assert!(gradient_check(s, 2, Mode::Eval, 4) < 1e-5);
        let s = single([3, 2, 2], vec![LayerSpec::Tanh]);
        assert!(gradient_check(s, 2, Mode::Eval, 5) < 1e-5);
    }

    #[test]
    fn gradient_dropout() {
        let s = single([3, 2, 2], vec![LayerSpec::Dropout { rate: 0.4 }]);
        assert!(gradient_check(s, 2, Mode::Train { dropout_seed: 9 }, 6) < 1e-5);
    }

    fn tiny() -> NetworkSpec {
        single(
            [1, 8, 8],
            vec![
                LayerSpec::Conv3x3 { out_channels: 2 },
                LayerSpec::LeakyRelu { slope: 0.01 },
                LayerSpec::Conv3x3 { out_channels: 2 },
                LayerSpec::LeakyRelu { slope: 0.01 },
                LayerSpec::MaxPool2,
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Flatten,
                LayerSpec::Dense { out_dim: 4 },
                LayerSpec::Tanh,
                LayerSpec::Dropout { rate: 0.5 },
                LayerSpec::Dense { out_dim: 2 },
                LayerSpec::Tanh,
            ],
        )
    }

    #[test]
    fn gradient_tiny_network() {
        assert!(gradient_check(tiny(), 2, Mode::Eval, 7) < 1e-5);
        assert!(gradient_check(tiny(), 2, Mode::Train { dropout_seed: 3 }, 8) < 1e-5);
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let p = he_init(&tiny(), 1).unwrap();
        let x = Tensor::from_vec(&[3, 1, 8, 8], (0..192).map(|i| (i as f64).sin()).collect()).unwrap();
        let (y, cache) = forward(&p, &x, Mode::Train { dropout_seed: 1 }).unwrap();
        let (_, g) = mse_loss(&y, &y).unwrap();
        assert!(backward(&p, &cache, &g).unwrap().is_zero());
    }

    #[test]
    fn all_keep_dropout_matches_no_dropout() {
        let mut spec = tiny();
        for l in &mut spec.layers {
            if let LayerSpec::Dropout { rate } = l {
                *rate = 0.0;
            }
        }
        let p = he_init(&spec, 2).unwrap();
        let x = Tensor::from_vec(&[2, 1, 8, 8], (0..128).map(|i| (i as f64 * 0.3).cos()).collect()).unwrap();
        let t = Tensor::zeros(&[2, 2]);
        let grads = |mode| {
            let (y, cache) = forward(&p, &x, mode).unwrap();
            let (_, g) = mse_loss(&y, &t).unwrap();
            backward(&p, &cache, &g).unwrap()
        };
        assert_eq!(grads(Mode::Train { dropout_seed: 5 }), grads(Mode::Eval));
    }

    #[test]
    fn eval_ignores_dropout_seed_and_train_uses_it() {
        let p = he_init(&tiny(), 3).unwrap();
        let x = Tensor::from_vec(&[1, 1, 8, 8], (0..64).map(|i| i as f64 / 64.0).collect()).unwrap();
        let a = predict(&p, &x).unwrap();
        let (b, _) = forward(&p, &x, Mode::Eval).unwrap();
        assert_eq!(a, b);
        let (t1, _) = forward(&p, &x, Mode::Train { dropout_seed: 1 }).unwrap();
        let (t2, _) = forward(&p, &x, Mode::Train { dropout_seed: 2 }).unwrap();
        let (t1b, _) = forward(&p, &x, Mode::Train { dropout_seed: 1 }).unwrap();
        assert_ne!(t1, t2);
        assert_eq!(t1, t1b);
    }

    #[test]
    fn dropout_expectation_on_linear_probe() {
        let spec = single(
            [20, 1, 1],
            vec![LayerSpec::Flatten, LayerSpec::Dropout { rate: 0.5 }, LayerSpec::Dense { out_dim: 3 }],
        );
        let p = he_init(&spec, 4).unwrap();
        let x = Tensor::from_vec(&[1, 20, 1, 1], (0..20).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap();
        let eval = predict(&p, &x).unwrap();
        let n = 4000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for s in 0..n {
            let (y, _) = forward(&p, &x, Mode::Train { dropout_seed: s }).unwrap();
            for k in 0..3 {
                sum[k] += y.data()[k];
                sq[k] += y.data()[k] * y.data()[k];
            }
        }
        for k in 0..3 {
            let mean = sum[k] / n as f64;
            let sd = (sq[k] / n as f64 - mean * mean).sqrt();
            let se = sd / (n as f64).sqrt();
            assert!((mean - eval.data()[k]).abs() < 5.0 * se, "output {k}: {mean} vs {}", eval.data()[k]);
        }
    }

    #[test]
    fn zero_everything_gives_zero_output() {
        let mut p = he_init(&NetworkSpec::vgg(3, 16, &[2, 2], 4, 18, 0.01, 0.25, 0.5), 0).unwrap();
        for l in p.layers.iter_mut().flatten() {
            l.weight.fill(0.0);
        }
        let y = predict(&p, &Tensor::zeros(&[2, 3, 16, 16])).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn outputs_stay_inside_tanh_range() {
        let spec = NetworkSpec::vgg(3, 32, &[4, 4, 8], 16, 18, 0.01, 0.25, 0.5);
        let p = he_init(&spec, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Tensor::from_vec(&[4, 3, 32, 32], randn(&mut rng, 4 * 3 * 1024)).unwrap();
        let y = predict(&p, &x).unwrap();
        assert!(y.data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn rejects_wrong_input_shape() {
        let p = he_init(&tiny(), 0).unwrap();
        assert!(predict(&p, &Tensor::zeros(&[1, 2, 8, 8])).is_err());
        assert!(predict(&p, &Tensor::zeros(&[1, 8, 8])).is_err());
    }

    #[test]
    fn full_network_shape_contract() {
        for k in [1, 3, 5, 7, 9] {
            let spec = NetworkSpec::full(k);
            let shapes = spec.shapes().unwrap();
            assert!(shapes.contains(&vec![2048]));
            let p = he_init(&spec, k as u64).unwrap();
            let y = predict(&p, &Tensor::zeros(&[1, k, 128, 128])).unwrap();
            assert_eq!(y.shape(), &[1, 18]);
        }
    }
}
