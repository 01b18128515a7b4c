use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::backward;
use super::{adam_step, forward, predict, AdamConfig, Gradients, ModelParams, Mode, Tensor};
use crate::{Error, Result};

/// Samples handed to each forward/backward call. Batches are cut into
/// chunks of this size and the chunk gradients are summed in order, so
/// results do not depend on the worker count.
const CHUNK: usize = 4;

/// Indexed (input, target) pairs. Implementations build samples on demand,
/// which keeps large clip sets out of memory.
pub trait SampleSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes sample `idx` into `input` (one clip, flattened) and `target`.
    fn fill(&self, idx: usize, input: &mut [f64], target: &mut [f64]) -> Result<()>;
}

/// In-memory samples.
#[derive(Debug, Clone, Default)]
pub struct VecSource {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl SampleSource for VecSource {
    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn fill(&self, idx: usize, input: &mut [f64], target: &mut [f64]) -> Result<()> {
        let (x, t) = (&self.inputs[idx], &self.targets[idx]);
        if x.len() != input.len() || t.len() != target.len() {
            return Err(Error::Shape(format!(
                "sample {idx}: input {} / target {} elements, network wants {} / {}",
                x.len(),
                t.len(),
                input.len(),
                target.len()
            )));
        }
        input.copy_from_slice(x);
        target.copy_from_slice(t);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Architecture knobs: read when the network spec is built, not by `train`.
    pub conv_dropout: f64,
    pub dense_dropout: f64,
    pub leaky_slope: f64,
    /// Non-improving validation epochs tolerated; 0 stops at the first one.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            batch_size: 32,
            conv_dropout: 0.25,
            dense_dropout: 0.5,
            leaky_slope: 0.01,
            patience: 5,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        for r in [self.conv_dropout, self.dense_dropout] {
            if !(0.0..1.0).contains(&r) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        if !(self.leaky_slope >= 0.0 && self.leaky_slope.is_finite()) {
            return bad("leaky_slope must be non-negative");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean train-mode minibatch loss over the epoch.
    pub train_mse: f64,
    /// Eval-mode loss on the validation set (or the train set without one).
    pub val_mse: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

fn sizes(params: &ModelParams) -> Result<(usize, usize)> {
    let input: usize = params.spec.input.iter().product();
    Ok((input, params.spec.output_dim()?))
}

fn load(src: &dyn SampleSource, idx: &[usize], params: &ModelParams) -> Result<(Tensor, Tensor)> {
    let (in_len, out_len) = sizes(params)?;
    let mut x = vec![0.0; idx.len() * in_len];
    let mut t = vec![0.0; idx.len() * out_len];
    for (j, &i) in idx.iter().enumerate() {
        src.fill(
            i,
            &mut x[j * in_len..(j + 1) * in_len],
            &mut t[j * out_len..(j + 1) * out_len],
        )?;
    }
    let [c, h, w] = params.spec.input;
    Ok((
        Tensor::from_vec(&[idx.len(), c, h, w], x)?,
        Tensor::from_vec(&[idx.len(), out_len], t)?,
    ))
}

fn chunk_seed(seed: u64, epoch: usize, batch: usize, chunk: usize) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [epoch as u64, batch as u64, chunk as u64] {
        h = (h ^ v).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

/// Eval-mode outputs for `count` samples, in order.
pub fn predict_source(params: &ModelParams, src: &dyn SampleSource) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..src.len()).collect();
    let outs: Vec<Result<Vec<Vec<f64>>>> = idx
        .par_chunks(CHUNK)
        .map(|c| {
            let (x, _) = load(src, c, params)?;
            let y = predict(params, &x)?;
            Ok((0..c.len()).map(|b| y.item(b).to_vec()).collect())
        })
        .collect();
    let mut all = Vec::with_capacity(src.len());
    for o in outs {
        all.extend(o?);
    }
    Ok(all)
}

/// Eval-mode MSE over a whole source.
pub fn evaluate_mse(params: &ModelParams, src: &dyn SampleSource) -> Result<f64> {
    if src.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty set".into()));
    }
    let idx: Vec<usize> = (0..src.len()).collect();
    let parts: Vec<Result<f64>> = idx
        .par_chunks(CHUNK)
        .map(|c| {
            let (x, t) = load(src, c, params)?;
            let y = predict(params, &x)?;
            Ok(y.data().iter().zip(t.data()).map(|(a, b)| (a - b).powi(2)).sum())
        })
        .collect();
    let mut sum = 0.0;
    for p in parts {
        sum += p?;
    }
    Ok(sum / (src.len() * params.spec.output_dim()?) as f64)
}

/// One minibatch: returns the summed gradients and the batch loss.
fn batch_gradients(
    params: &ModelParams,
    src: &dyn SampleSource,
    idx: &[usize],
    seeds: (u64, usize, usize),
) -> Result<(Gradients, f64)> {
    let out_dim = params.spec.output_dim()?;
    let denom = (idx.len() * out_dim) as f64;
    let parts: Vec<Result<(Gradients, f64)>> = idx
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, c)| {
            let (x, t) = load(src, c, params)?;
            let mode = Mode::Train {
                dropout_seed: chunk_seed(seeds.0, seeds.1, seeds.2, ci),
            };
            let (y, cache) = forward(params, &x, mode)?;
            let mut sq = 0.0;
            let g: Vec<f64> = y
                .data()
                .iter()
                .zip(t.data())
                .map(|(a, b)| {
                    sq += (a - b) * (a - b);
                    2.0 * (a - b) / denom
                })
                .collect();
            let g = Tensor::from_vec(y.shape(), g)?;
            Ok((backward(params, &cache, &g)?, sq))
        })
        .collect();
    let mut total = Gradients::zeros_like(params);
    let mut sq = 0.0;
    for p in parts {
        let (g, s) = p?;
        total.accumulate(&g);
        sq += s;
    }
    Ok((total, sq / denom))
}

/// Adam training with per-epoch shuffling and early stopping on validation
/// MSE. `val` of `None` tracks the eval-mode training loss instead.
pub fn train(
    params: ModelParams,
    train_set: &dyn SampleSource,
    val: Option<&dyn SampleSource>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_progress(params, train_set, val, cfg, &mut |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    mut params: ModelParams,
    train_set: &dyn SampleSource,
    val: Option<&dyn SampleSource>,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if val.is_some_and(|v| v.is_empty()) {
        return Err(Error::Data("validation set is empty".into()));
    }
    let adam = cfg.adam();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = Instant::now();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut counted = 0usize;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let (grads, loss) = batch_gradients(&params, train_set, batch, (cfg.seed, epoch, bi))?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            adam_step(&mut params, &grads, &adam)?;
            loss_sum += loss * batch.len() as f64;
            counted += batch.len();
        }
        let val_mse = evaluate_mse(&params, val.unwrap_or(train_set))?;
        if !val_mse.is_finite() || !params.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let record = EpochRecord {
            epoch,
            train_mse: loss_sum / counted as f64,
            val_mse,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        progress(&record);
        history.push(record);

        let improved = best.as_ref().is_none_or(|(b, _, _)| val_mse < *b);
        if improved {
            best = Some((val_mse, epoch, params.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience.max(1) {
                break;
            }
        }
    }
    let (best_val_mse, best_epoch, params) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        best_val_mse,
    })
}
