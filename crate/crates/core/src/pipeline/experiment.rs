use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::dataset::{carve_validation, fit_standardizer, load_sequences, ClipDataset, Sequence};
use super::{RunConfig, SplitPlan};
use crate::codec::{SoundFeatureVector, Standardizer};
use crate::nn::{he_init, predict_features, train_with_progress, EpochRecord, ModelParams, Tensor};
use crate::vision::{clip_from_scaled, CropRegion, CropSpec, Manifest, ScaledFrame, VALID_CONTEXT};
use crate::{Error, Result};

/// Frames per inference call.
const PREDICT_CHUNK: usize = 8;

pub fn check_context(k: usize) -> Result<()> {
    if VALID_CONTEXT.contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("K must be one of {VALID_CONTEXT:?}, got {k}")))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    /// Losses in standardized-feature units.
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub fit_ids: Vec<String>,
    pub val_ids: Vec<String>,
}

/// Train a fresh network on the training partition. The standardizer is fit
/// on every training sequence; a seeded share of them is held back for
/// early stopping and scored on every frame regardless of `frame_stride`.
pub fn train_from_sequences(
    train_seqs: &[&Sequence],
    k: usize,
    crop: CropRegion,
    cfg: &RunConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainedModel> {
    check_context(k)?;
    cfg.validate()?;
    if train_seqs.is_empty() {
        return Err(Error::Data("training partition is empty".into()));
    }
    let standardizer = fit_standardizer(train_seqs)?;
    let ids: Vec<String> = train_seqs.iter().map(|s| s.id.clone()).collect();
    let (fit_ids, val_ids) = carve_validation(&ids, cfg.val_fraction, cfg.train.seed);
    let pick = |want: &[String]| -> Vec<&Sequence> {
        train_seqs.iter().copied().filter(|s| want.contains(&s.id)).collect()
    };
    let scale = cfg.target_scale;
    let fit = ClipDataset::new(pick(&fit_ids), k, cfg.frame_stride, &standardizer, scale)?;
    let val = if val_ids.is_empty() {
        None
    } else {
        Some(ClipDataset::new(pick(&val_ids), k, 1, &standardizer, scale)?)
    };

    let mut params = he_init(&cfg.network(k), cfg.train.seed)?;
    params.standardizer = standardizer;
    params.target_scale = scale;
    params.crop = crop;

    let unscale = |r: &EpochRecord| EpochRecord {
        train_mse: r.train_mse / (scale * scale),
        val_mse: r.val_mse / (scale * scale),
        ..r.clone()
    };
    let out = train_with_progress(
        params,
        &fit,
        val.as_ref().map(|v| v as &dyn crate::nn::SampleSource),
        &cfg.train,
        &mut |r| progress(&unscale(r)),
    )?;
    Ok(TrainedModel {
        params: out.params,
        history: out.history.iter().map(unscale).collect(),
        best_epoch: out.best_epoch,
        fit_ids,
        val_ids,
    })
}

pub fn write_loss_csv(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_mse", "val_mse", "elapsed_s"])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.10e}", r.train_mse),
            format!("{:.10e}", r.val_mse),
            format!("{:.3}", r.elapsed_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Predicted raw features for every frame of a sequence.
pub fn predict_sequence(params: &ModelParams, frames: &[ScaledFrame]) -> Result<Vec<SoundFeatureVector>> {
    let [k, h, w] = params.spec.input;
    if let Some(f) = frames.iter().find(|f| f.side != h || f.side != w) {
        return Err(Error::Shape(format!("frames are {0}×{0}, model expects {h}×{w}", f.side)));
    }
    let centres: Vec<usize> = (0..frames.len()).collect();
    let parts = centres
        .par_chunks(PREDICT_CHUNK)
        .map(|c| {
            let mut data = Vec::with_capacity(c.len() * k * h * w);
            for &i in c {
                data.extend(clip_from_scaled(frames, i, k)?.voxels);
            }
            predict_features(params, &Tensor::from_vec(&[c.len(), k, h, w], data)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub vectors: usize,
    /// MSE of the standardized 18-element vectors.
    pub std_mse: f64,
    /// Mean absolute LSP-frequency error, radians.
    pub lsp_mae: f64,
    pub gain_mae: f64,
}

pub fn metrics(pairs: &[(SoundFeatureVector, SoundFeatureVector)], standardizer: &Standardizer) -> Metrics {
    if pairs.is_empty() {
        return Metrics { vectors: 0, std_mse: f64::NAN, lsp_mae: f64::NAN, gain_mae: f64::NAN };
    }
    let (mut sq, mut lsp, mut gain) = (0.0, 0.0, 0.0);
    for (pred, truth) in pairs {
        let (zp, zt) = (standardizer.apply(pred), standardizer.apply(truth));
        sq += zp.iter().zip(&zt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        lsp += pred.freqs().zip(truth.freqs()).map(|(a, b)| (a - b).abs()).sum::<f64>();
        gain += pred.gains().iter().zip(truth.gains()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    let n = pairs.len() as f64;
    Metrics {
        vectors: pairs.len(),
        std_mse: sq / (n * 18.0),
        lsp_mae: lsp / (n * 16.0),
        gain_mae: gain / (n * 2.0),
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub overall: Metrics,
    /// Scores of always predicting the training mean.
    pub mean_predictor: Metrics,
    pub per_digit: [Metrics; 10],
}

/// Score predictions against the features encoded from each sequence's
/// audio.
pub fn evaluate(params: &ModelParams, seqs: &[&Sequence]) -> Result<EvalReport> {
    let mut pairs: Vec<(Option<u8>, SoundFeatureVector, SoundFeatureVector)> = Vec::new();
    for s in seqs {
        let pred = predict_sequence(params, &s.frames)?;
        pairs.extend(pred.into_iter().zip(&s.features).map(|(p, t)| (s.digit, p, *t)));
    }
    let st = &params.standardizer;
    let mean = SoundFeatureVector(st.mean);
    let all: Vec<_> = pairs.iter().map(|(_, p, t)| (*p, *t)).collect();
    let baseline: Vec<_> = pairs.iter().map(|(_, _, t)| (mean, *t)).collect();
    let per_digit = std::array::from_fn(|d| {
        let sub: Vec<_> = pairs
            .iter()
            .filter(|(g, _, _)| *g == Some(d as u8))
            .map(|(_, p, t)| (*p, *t))
            .collect();
        metrics(&sub, st)
    });
    Ok(EvalReport {
        overall: metrics(&all, st),
        mean_predictor: metrics(&baseline, st),
        per_digit,
    })
}

impl EvalReport {
    /// CSV with rows `all`, `mean_predictor`, `digit_0` .. `digit_9`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("group,vectors,std_mse,lsp_mae,gain_mae\n");
        let mut row = |name: &str, m: &Metrics| {
            let _ = writeln!(s, "{name},{},{:.8e},{:.8e},{:.8e}", m.vectors, m.std_mse, m.lsp_mae, m.gain_mae);
        };
        row("all", &self.overall);
        row("mean_predictor", &self.mean_predictor);
        for (d, m) in self.per_digit.iter().enumerate() {
            row(&format!("digit_{d}"), m);
        }
        s
    }
}

/// K values × crop regions for the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub ks: Vec<usize>,
    pub crops: Vec<CropRegion>,
}

impl FromStr for ExperimentGrid {
    type Err = Error;

    /// `k=1,3,5;crop=full_face,mouth`
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("grid {s:?}: {m}"));
        let (mut ks, mut crops) = (None, None);
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, vals) = part.split_once('=').ok_or_else(|| bad(format!("expected key=list in {part:?}")))?;
            let items = vals.split(',').map(str::trim);
            match key.trim() {
                "k" => {
                    let v: Vec<usize> = items
                        .map(|x| x.parse().map_err(|_| bad(format!("bad K {x:?}"))))
                        .collect::<Result<_>>()?;
                    v.iter().try_for_each(|&k| check_context(k))?;
                    ks = Some(v);
                }
                "crop" => {
                    crops = Some(
                        items
                            .map(|x| x.parse::<CropRegion>().map_err(|_| bad(format!("bad crop {x:?}"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let grid = Self {
            ks: ks.ok_or_else(|| bad("missing k list".into()))?,
            crops: crops.ok_or_else(|| bad("missing crop list".into()))?,
        };
        if grid.ks.is_empty() || grid.crops.is_empty() {
            return Err(bad("empty axis".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub k: usize,
    pub crop: CropRegion,
    pub test: Metrics,
    pub best_epoch: usize,
    pub epochs: usize,
    pub fit_ids: Vec<String>,
}

/// Train one model from scratch per grid cell with the same split and seed
/// and score each on the test partition.
pub fn run_sweep(
    manifest: &Manifest,
    plan: &SplitPlan,
    grid: &ExperimentGrid,
    cfg: &RunConfig,
    progress: &mut dyn FnMut(usize, CropRegion, &EpochRecord),
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &crop in &grid.crops {
        let spec = CropSpec::for_region(crop);
        let train = load_sequences(manifest, &plan.train, &spec, cfg.clip_side)?;
        let test = load_sequences(manifest, &plan.test, &spec, cfg.clip_side)?;
        let train_refs: Vec<&Sequence> = train.iter().collect();
        let test_refs: Vec<&Sequence> = test.iter().collect();
        for &k in &grid.ks {
            let model = train_from_sequences(&train_refs, k, crop, cfg, &mut |r| progress(k, crop, r))?;
            let report = evaluate(&model.params, &test_refs)?;
            cells.push(SweepCell {
                k,
                crop,
                test: report.overall,
                best_epoch: model.best_epoch,
                epochs: model.history.len(),
                fit_ids: model.fit_ids,
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from("k,crop,test_mse\n");
    for c in cells {
        let _ = writeln!(s, "{},{},{:.8e}", c.k, c.crop, c.test.std_mse);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::FEATURE_DIM;

    fn fv(x: f64) -> SoundFeatureVector {
        SoundFeatureVector(std::array::from_fn(|i| x + i as f64 * 0.1))
    }

    #[test]
    fn perfect_predictor_scores_zero() {
        let pairs: Vec<_> = (0..20).map(|i| (fv(i as f64 * 0.05), fv(i as f64 * 0.05))).collect();
        let st = Standardizer::fit(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
        let m = metrics(&pairs, &st);
        assert_eq!((m.vectors, m.std_mse, m.lsp_mae, m.gain_mae), (20, 0.0, 0.0, 0.0));
    }

    #[test]
    fn mean_predictor_scores_one_on_its_own_fit() {
        let truth: Vec<_> = (0..200).map(|i| fv(((i * 37) % 101) as f64 * 0.01)).collect();
        let st = Standardizer::fit(&truth).unwrap();
        let pairs: Vec<_> = truth.iter().map(|t| (SoundFeatureVector(st.mean), *t)).collect();
        assert!((metrics(&pairs, &st).std_mse - 1.0).abs() < 1e-9);
        let offset: Vec<_> = truth.iter().map(|t| (SoundFeatureVector(t.0.map(|v| v + 0.01)), *t)).collect();
        let m = metrics(&offset, &st);
        assert!((m.lsp_mae - 0.01).abs() < 1e-12 && (m.gain_mae - 0.01).abs() < 1e-12);
        assert_eq!(FEATURE_DIM, 18);
    }

    #[test]
    fn empty_group_is_nan() {
        let m = metrics(&[], &Standardizer::identity());
        assert_eq!(m.vectors, 0);
        assert!(m.std_mse.is_nan());
    }

    #[test]
    fn grid_parsing() {
        let g: ExperimentGrid = "k=1,3,5,7,9;crop=full_face,mouth".parse().unwrap();
        assert_eq!(g.ks, vec![1, 3, 5, 7, 9]);
        assert_eq!(g.crops, vec![CropRegion::FullFace, CropRegion::Mouth]);
        for bad in ["k=2;crop=mouth", "k=1", "k=1;crop=nose", "k=;crop=mouth", "x=1;k=1;crop=mouth"] {
            assert!(bad.parse::<ExperimentGrid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sweep_csv_shape() {
        let cell = |k, crop| SweepCell {
            k,
            crop,
            test: Metrics { vectors: 1, std_mse: 0.5, lsp_mae: 0.0, gain_mae: 0.0 },
            best_epoch: 1,
            epochs: 1,
            fit_ids: vec![],
        };
        let csv = sweep_csv(&[cell(1, CropRegion::FullFace), cell(5, CropRegion::Mouth)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,crop,test_mse");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("5,mouth,"));
    }
}
