use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::{encode_signal, read_wav, SoundFeatureVector, Standardizer, FEATURE_DIM};
use crate::nn::{feature_to_target, SampleSource};
use crate::vision::{clip_from_scaled, crop_scale_to, load_frames, CropSpec, Manifest, ManifestEntry, ScaledFrame};
use crate::{Error, Result};

/// One sentence ready for the network: cropped frames and the features
/// encoded from its audio.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub id: String,
    pub digit: Option<u8>,
    pub frames: Vec<ScaledFrame>,
    pub features: Vec<SoundFeatureVector>,
}

pub fn load_sequence(entry: &ManifestEntry, crop: &CropSpec, side: usize) -> Result<Sequence> {
    let frames: Vec<ScaledFrame> = load_frames(&entry.frames_dir)?
        .iter()
        .map(|f| crop_scale_to(f, crop, side))
        .collect();
    let audio = read_wav(&entry.wav)?;
    let features = encode_signal(&audio, frames.len())?;
    Ok(Sequence {
        id: entry.id.clone(),
        digit: entry.digit(),
        frames,
        features,
    })
}

/// Load the named sequences in the given order.
pub fn load_sequences(manifest: &Manifest, ids: &[String], crop: &CropSpec, side: usize) -> Result<Vec<Sequence>> {
    let entries = ids
        .iter()
        .map(|id| {
            manifest
                .get(id)
                .ok_or_else(|| Error::Data(format!("sequence {id} is not in the manifest")))
        })
        .collect::<Result<Vec<_>>>()?;
    entries.par_iter().map(|e| load_sequence(e, crop, side)).collect()
}

/// Split training ids into (fit, validation) by sequence. A positive
/// fraction always yields at least one validation sequence and leaves at
/// least one for fitting.
pub fn carve_validation(ids: &[String], fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    if fraction <= 0.0 || ids.len() < 2 {
        return (ids.to_vec(), Vec::new());
    }
    let n_val = ((ids.len() as f64 * fraction).round() as usize).clamp(1, ids.len() - 1);
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7661_6c69_6461_7465);
    order.shuffle(&mut rng);
    let mut val_mask = vec![false; ids.len()];
    for &i in &order[..n_val] {
        val_mask[i] = true;
    }
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for (id, v) in ids.iter().zip(val_mask) {
        if v { val.push(id.clone()) } else { fit.push(id.clone()) }
    }
    (fit, val)
}

/// Standardizer over every feature vector of the given sequences.
pub fn fit_standardizer(seqs: &[&Sequence]) -> Result<Standardizer> {
    let all: Vec<SoundFeatureVector> = seqs.iter().flat_map(|s| s.features.iter().copied()).collect();
    Standardizer::fit(&all)
}

/// (clip, scaled-standardized target) pairs built on demand from loaded
/// sequences.
pub struct ClipDataset<'a> {
    seqs: Vec<&'a Sequence>,
    k: usize,
    /// (sequence, frame) for each sample
    index: Vec<(usize, usize)>,
    targets: Vec<[f64; FEATURE_DIM]>,
}

impl<'a> ClipDataset<'a> {
    pub fn new(
        seqs: Vec<&'a Sequence>,
        k: usize,
        stride: usize,
        standardizer: &Standardizer,
        target_scale: f64,
    ) -> Result<Self> {
        let stride = stride.max(1);
        let mut index = Vec::new();
        let mut targets = Vec::new();
        for (si, s) in seqs.iter().enumerate() {
            if s.frames.len() != s.features.len() {
                return Err(Error::Data(format!(
                    "sequence {}: {} frames but {} feature vectors",
                    s.id,
                    s.frames.len(),
                    s.features.len()
                )));
            }
            for fi in (0..s.frames.len()).step_by(stride) {
                index.push((si, fi));
                targets.push(feature_to_target(standardizer, target_scale, &s.features[fi]));
            }
        }
        Ok(Self { seqs, k, index, targets })
    }

    /// The raw feature vector behind sample `i`.
    pub fn feature(&self, i: usize) -> &SoundFeatureVector {
        let (s, f) = self.index[i];
        &self.seqs[s].features[f]
    }

    pub fn digit(&self, i: usize) -> Option<u8> {
        self.seqs[self.index[i].0].digit
    }

    pub fn target(&self, i: usize) -> &[f64; FEATURE_DIM] {
        &self.targets[i]
    }
}

impl SampleSource for ClipDataset<'_> {
    fn len(&self) -> usize {
        self.index.len()
    }

    fn fill(&self, idx: usize, input: &mut [f64], target: &mut [f64]) -> Result<()> {
        let (s, f) = self.index[idx];
        let clip = clip_from_scaled(&self.seqs[s].frames, f, self.k)?;
        if clip.voxels.len() != input.len() || target.len() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "clip has {} voxels, network expects {}",
                clip.voxels.len(),
                input.len()
            )));
        }
        input.copy_from_slice(&clip.voxels);
        target.copy_from_slice(&self.targets[idx]);
        Ok(())
    }
}
