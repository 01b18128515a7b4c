use super::{predict, ModelParams, Tensor};
use crate::codec::{SoundFeatureVector, Standardizer, FEATURE_DIM};
use crate::{Error, Result};

/// Training target for a raw feature vector: standardized, then scaled into
/// the tanh range.
pub fn feature_to_target(standardizer: &Standardizer, target_scale: f64, f: &SoundFeatureVector) -> [f64; FEATURE_DIM] {
    standardizer.apply(f).map(|z| z * target_scale)
}

/// Inverse of [`feature_to_target`].
pub fn output_to_feature(standardizer: &Standardizer, target_scale: f64, y: &[f64]) -> Result<SoundFeatureVector> {
    let z: [f64; FEATURE_DIM] = y
        .try_into()
        .map_err(|_| Error::Shape(format!("network output has {} values, expected {FEATURE_DIM}", y.len())))?;
    Ok(standardizer.invert(&z.map(|v| v / target_scale)))
}

/// Eval-mode prediction mapped back to raw gain/frequency features.
pub fn predict_features(params: &ModelParams, clips: &Tensor) -> Result<Vec<SoundFeatureVector>> {
    let y = predict(params, clips)?;
    (0..y.batch())
        .map(|b| output_to_feature(&params.standardizer, params.target_scale, y.item(b)))
        .collect()
}
