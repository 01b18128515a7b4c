use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::{load_sequences, Sequence};
use super::experiment::{
    check_context, evaluate, predict_sequence, run_sweep, sweep_csv, train_from_sequences, write_loss_csv, EvalReport,
    ExperimentGrid, SweepCell, TrainedModel,
};
use super::{RunConfig, SplitMode, SplitPlan};
use crate::codec::{read_features_csv, synthesize, write_features_csv, write_wav, AudioSignal};
use crate::nn::{load_model, save_model, EpochRecord, ModelParams};
use crate::synthdata::{generate_corpus, MANIFEST_FILE};
use crate::vision::{crop_scale_to, load_frames, CropRegion, CropSpec, Manifest};
use crate::{Error, Result};

/// Generate a synthetic corpus and return the manifest path. Refuses a
/// non-empty directory unless `force`, in which case files are overwritten
/// in place.
pub fn cmd_gen(out: &Path, sequences: usize, seed: u64, force: bool) -> Result<PathBuf> {
    if sequences < 10 {
        return Err(Error::InvalidArgument(format!("need ≥ 10 sequences, got {sequences}")));
    }
    if !force && out.exists() && fs::read_dir(out)?.next().is_some() {
        return Err(Error::InvalidArgument(format!(
            "{} exists and is not empty (use --force)",
            out.display()
        )));
    }
    generate_corpus(out, sequences, seed)?;
    Ok(out.join(MANIFEST_FILE))
}

pub fn cmd_split(manifest: &Path, mode: SplitMode, holdout: Option<[u8; 2]>, seed: u64, out: &Path) -> Result<SplitPlan> {
    let m = Manifest::load(manifest)?;
    let plan = SplitPlan::build(&m, mode, holdout, seed)?;
    plan.save(out)?;
    Ok(plan)
}

/// Default loss-log path next to a model file.
pub fn loss_log_path(model: &Path) -> PathBuf {
    model.with_extension("loss.csv")
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    manifest: &Path,
    plan: &Path,
    k: usize,
    crop: CropRegion,
    cfg: &RunConfig,
    out: &Path,
    log: &Path,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainedModel> {
    check_context(k)?;
    cfg.validate()?;
    let m = Manifest::load(manifest)?;
    let plan = SplitPlan::load(plan)?;
    let seqs = load_sequences(&m, &plan.train, &CropSpec::for_region(crop), cfg.clip_side)?;
    let refs: Vec<&Sequence> = seqs.iter().collect();
    let model = train_from_sequences(&refs, k, crop, cfg, progress)?;
    save_model(&model.params, out)?;
    write_loss_csv(log, &model.history)?;
    Ok(model)
}

fn check_model(params: &ModelParams, k: usize, crop: CropRegion) -> Result<()> {
    let stored = params.spec.context();
    if stored != k {
        return Err(Error::InvalidArgument(format!("model was trained with K={stored}, not K={k}")));
    }
    if params.crop != crop {
        return Err(Error::InvalidArgument(format!(
            "model was trained on {} crops, not {crop}",
            params.crop
        )));
    }
    Ok(())
}

/// Predict features for a frame directory; returns the number of rows.
pub fn cmd_predict(model: &Path, frames: &Path, k: usize, crop: CropRegion, out: &Path) -> Result<usize> {
    let params = load_model(model)?;
    check_model(&params, k, crop)?;
    let side = params.spec.input[1];
    let spec = CropSpec::for_region(crop);
    let scaled: Vec<_> = load_frames(frames)?.iter().map(|f| crop_scale_to(f, &spec, side)).collect();
    let feats = predict_sequence(&params, &scaled)?;
    write_features_csv(out, &feats)?;
    Ok(feats.len())
}

pub fn cmd_synth(features: &Path, seed: u64, out: &Path) -> Result<AudioSignal> {
    let f = read_features_csv(features)?;
    let audio = synthesize(&f, seed)?;
    write_wav(out, &audio)?;
    Ok(audio)
}

pub fn cmd_sweep(
    manifest: &Path,
    plan: &Path,
    grid: &ExperimentGrid,
    cfg: &RunConfig,
    out: &Path,
    progress: &mut dyn FnMut(usize, CropRegion, &EpochRecord),
) -> Result<Vec<SweepCell>> {
    let m = Manifest::load(manifest)?;
    let plan = SplitPlan::load(plan)?;
    let cells = run_sweep(&m, &plan, grid, cfg, progress)?;
    fs::write(out, sweep_csv(&cells))?;
    Ok(cells)
}

pub fn cmd_eval(model: &Path, manifest: &Path, plan: &Path, out: &Path) -> Result<EvalReport> {
    let params = load_model(model)?;
    let m = Manifest::load(manifest)?;
    let plan = SplitPlan::load(plan)?;
    let seqs = load_sequences(&m, &plan.test, &CropSpec::for_region(params.crop), params.spec.input[1])?;
    let refs: Vec<&Sequence> = seqs.iter().collect();
    let report = evaluate(&params, &refs)?;
    fs::write(out, report.to_csv())?;
    Ok(report)
}
