use std::path::Path;

use super::{frame_signal, lpc_analyze, lpc_to_lsp, AudioSignal, LspFrame, FRAME_LEN, HOP, LPC_ORDER, SAMPLE_RATE};
use crate::{Error, Result};

/// Length of one sound feature vector: two frames of gain + 8 LSPs.
pub const FEATURE_DIM: usize = 2 * (LPC_ORDER + 1);
/// Lower bound applied to standard deviations.
pub const STD_EPSILON: f64 = 1e-8;
/// CSV header for feature dumps.
pub const FEATURE_HEADER: [&str; FEATURE_DIM] = [
    "g0", "w01", "w02", "w03", "w04", "w05", "w06", "w07", "w08", "g1", "w11", "w12", "w13",
    "w14", "w15", "w16", "w17", "w18",
];

/// Sound features for one video frame: `[g0, w01..w08, g1, w11..w18]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoundFeatureVector(pub [f64; FEATURE_DIM]);

impl SoundFeatureVector {
    pub fn from_pair(first: &LspFrame, second: &LspFrame) -> Self {
        let mut v = [0.0; FEATURE_DIM];
        for (half, lsp) in [first, second].into_iter().enumerate() {
            let base = half * (LPC_ORDER + 1);
            v[base] = lsp.gain;
            v[base + 1..base + 1 + LPC_ORDER].copy_from_slice(&lsp.freqs);
        }
        Self(v)
    }

    /// Split back into the two frames. No validation is performed.
    pub fn to_pair(&self) -> (LspFrame, LspFrame) {
        let frame = |half: usize| {
            let base = half * (LPC_ORDER + 1);
            let mut freqs = [0.0; LPC_ORDER];
            freqs.copy_from_slice(&self.0[base + 1..base + 1 + LPC_ORDER]);
            LspFrame {
                gain: self.0[base],
                freqs,
            }
        };
        (frame(0), frame(1))
    }

    pub fn gains(&self) -> [f64; 2] {
        [self.0[0], self.0[LPC_ORDER + 1]]
    }

    /// Iterator over the 16 frequency entries.
    pub fn freqs(&self) -> impl Iterator<Item = f64> + '_ {
        self.0[1..=LPC_ORDER]
            .iter()
            .chain(&self.0[LPC_ORDER + 2..])
            .copied()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Encode an 8 kHz signal into one feature vector per video frame. Vector
/// `i` is built from audio frames `2i` and `2i + 1`.
pub fn encode_signal(signal: &AudioSignal, video_frame_count: usize) -> Result<Vec<SoundFeatureVector>> {
    if signal.sample_rate != SAMPLE_RATE {
        return Err(Error::InvalidArgument(format!(
            "codec expects {SAMPLE_RATE} Hz audio, got {} Hz",
            signal.sample_rate
        )));
    }
    let frames = frame_signal(signal, FRAME_LEN, HOP, 2 * video_frame_count)?;
    let lsps = frames
        .iter()
        .map(|f| lpc_analyze(f).and_then(|lpc| lpc_to_lsp(&lpc)))
        .collect::<Result<Vec<_>>>()?;
    Ok(lsps
        .chunks_exact(2)
        .map(|pair| SoundFeatureVector::from_pair(&pair[0], &pair[1]))
        .collect())
}

/// Element-wise standardization fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl Standardizer {
    /// Per-element mean and population standard deviation, with the standard
    /// deviation clamped to [`STD_EPSILON`].
    pub fn fit(features: &[SoundFeatureVector]) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "standardizer needs at least 2 vectors, got {}",
                features.len()
            )));
        }
        let n = features.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        for f in features {
            for (m, x) in mean.iter_mut().zip(&f.0) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        // second pass removes the rounding left by the plain sum
        let mut correction = [0.0; FEATURE_DIM];
        for f in features {
            for ((c, x), m) in correction.iter_mut().zip(&f.0).zip(&mean) {
                *c += x - m;
            }
        }
        for (m, c) in mean.iter_mut().zip(&correction) {
            *m += c / n;
        }
        let mut var = [0.0; FEATURE_DIM];
        for f in features {
            for ((v, x), m) in var.iter_mut().zip(&f.0).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let mut std = [0.0; FEATURE_DIM];
        for (s, v) in std.iter_mut().zip(&var) {
            *s = (v / n).sqrt().max(STD_EPSILON);
        }
        Ok(Self { mean, std })
    }

    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_DIM],
            std: [1.0; FEATURE_DIM],
        }
    }

    pub fn apply(&self, x: &SoundFeatureVector) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            out[i] = (x.0[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    pub fn invert(&self, z: &[f64; FEATURE_DIM]) -> SoundFeatureVector {
        let mut out = [0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            out[i] = z[i] * self.std[i] + self.mean[i];
        }
        SoundFeatureVector(out)
    }
}

/// Write one row per video frame under the `g0,w01..w18` header.
pub fn write_features_csv(path: impl AsRef<Path>, features: &[SoundFeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(FEATURE_HEADER)?;
    for f in features {
        w.write_record(f.0.iter().map(|x| format!("{x:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<SoundFeatureVector>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(FEATURE_HEADER.iter().copied()) {
        return Err(Error::Data(format!(
            "{}: unexpected feature header {:?}",
            path.display(),
            header
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != FEATURE_DIM {
            return Err(Error::Data(format!(
                "{}: row {} has {} columns, expected {FEATURE_DIM}",
                path.display(),
                row + 1,
                rec.len()
            )));
        }
        let mut v = [0.0; FEATURE_DIM];
        for (dst, field) in v.iter_mut().zip(rec.iter()) {
            *dst = field.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "{}: row {}: cannot parse {field:?}",
                    path.display(),
                    row + 1
                ))
            })?;
        }
        out.push(SoundFeatureVector(v));
    }
    Ok(out)
}
