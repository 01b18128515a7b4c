use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{lsp_to_lpc, AudioSignal, LspFrame, SoundFeatureVector, FRAME_LEN, HOP, LPC_ORDER};
use crate::{Error, Result};

/// Peak amplitude of synthesized output.
pub const OUTPUT_PEAK: f64 = 0.95;
const FREQ_MARGIN: f64 = 0.001;
const MIN_GAP: f64 = 1e-4;

/// Force an arbitrary real-valued frame into a valid [`LspFrame`]: gain
/// clamped to >= 0, frequencies sorted and held inside
/// `[0.001, pi - 0.001]` with at least 1e-4 rad between neighbours.
/// Non-finite values are replaced by the flat-spectrum defaults.
pub fn sanitize_lsp(raw: &LspFrame) -> LspFrame {
    let flat = LspFrame::flat(0.0);
    let gain = if raw.gain.is_finite() { raw.gain.max(0.0) } else { 0.0 };
    let mut freqs = raw.freqs;
    for (f, d) in freqs.iter_mut().zip(flat.freqs) {
        if !f.is_finite() {
            *f = d;
        }
    }
    freqs.sort_by(f64::total_cmp);
    let lo = FREQ_MARGIN;
    let hi = PI - FREQ_MARGIN;
    for f in freqs.iter_mut() {
        *f = f.clamp(lo, hi);
    }
    for k in 1..LPC_ORDER {
        freqs[k] = freqs[k].max(freqs[k - 1] + MIN_GAP);
    }
    if freqs[LPC_ORDER - 1] > hi {
        freqs[LPC_ORDER - 1] = hi;
        for k in (0..LPC_ORDER - 1).rev() {
            freqs[k] = freqs[k].min(freqs[k + 1] - MIN_GAP);
        }
    }
    LspFrame { gain, freqs }
}

/// Output length for `n` feature vectors: `2n` frames on the 160-sample hop.
pub fn synthesized_len(n_vectors: usize) -> usize {
    HOP * (2 * n_vectors - 1) + FRAME_LEN
}

/// Unvoiced resynthesis.
///
/// Every 40 ms frame filters one shared, seeded Gaussian white-noise stream
/// through `gain / A(z)`. Each frame's filter starts from the output history
/// of the previous frame, and neighbouring frames are cross-faded with
/// triangular windows that sum to one across the 20 ms overlap. The result is
/// peak-normalized to [`OUTPUT_PEAK`] (unless it is silent).
pub fn synthesize(features: &[SoundFeatureVector], noise_seed: u64) -> Result<AudioSignal> {
    if features.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot synthesize an empty feature sequence".into(),
        ));
    }
    let frames: Vec<LspFrame> = features
        .iter()
        .flat_map(|f| {
            let (a, b) = f.to_pair();
            [sanitize_lsp(&a), sanitize_lsp(&b)]
        })
        .collect();
    let total = synthesized_len(features.len());
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise: Vec<f64> = (0..total).map(|_| StandardNormal.sample(&mut rng)).collect();
    let window: Vec<f64> = (0..FRAME_LEN)
        .map(|n| 1.0 - (n as f64 - HOP as f64).abs() / HOP as f64)
        .collect();

    let mut out = vec![0.0; total];
    let mut history = [0.0; LPC_ORDER]; // history[j] = y[start - 1 - j]
    let mut raw = vec![0.0; FRAME_LEN];
    for (k, lsp) in frames.iter().enumerate() {
        let lpc = lsp_to_lpc(lsp)?;
        let start = k * HOP;
        let mut state = history;
        for n in 0..FRAME_LEN {
            let mut y = lpc.gain * noise[start + n];
            for j in 0..LPC_ORDER {
                y -= lpc.coeffs[j] * state[j];
            }
            state.rotate_right(1);
            state[0] = y;
            raw[n] = y;
            if n + 1 == HOP {
                history = state;
            }
        }
        for n in 0..FRAME_LEN {
            out[start + n] += window[n] * raw[n];
        }
    }

    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("synthesis produced non-finite samples".into()));
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let scale = OUTPUT_PEAK / peak;
        out.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(AudioSignal::at_codec_rate(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::FEATURE_DIM;
    use proptest::prelude::*;

    fn resonance(center: f64, gain: f64) -> SoundFeatureVector {
        // one narrow pair around `center`, the rest spread above it
        let mut lsp = LspFrame::flat(gain);
        lsp.freqs[0] = center - 0.01;
        lsp.freqs[1] = center + 0.01;
        for k in 2..LPC_ORDER {
            lsp.freqs[k] = center + 0.01 + (k - 1) as f64 * (PI - center - 0.01) / 7.0;
        }
        SoundFeatureVector::from_pair(&lsp, &lsp)
    }

    /// Naive DFT power at `hz`, averaged over consecutive 512-sample blocks.
    fn power_at(x: &[f64], hz: f64) -> f64 {
        let w = 2.0 * PI * hz / 8000.0;
        x.chunks_exact(512)
            .map(|b| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in b.iter().enumerate() {
                    re += v * (w * n as f64).cos();
                    im -= v * (w * n as f64).sin();
                }
                re * re + im * im
            })
            .sum()
    }

    #[test]
    fn silence_gives_zero_signal() {
        let feats = vec![SoundFeatureVector::from_pair(&LspFrame::flat(0.0), &LspFrame::flat(0.0)); 75];
        let sig = synthesize(&feats, 1).unwrap();
        assert_eq!(sig.len(), 160 * 151);
        assert!(sig.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let feats = vec![resonance(0.8, 0.3); 20];
        let a = synthesize(&feats, 42).unwrap();
        let b = synthesize(&feats, 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize(&feats, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_is_error() {
        assert!(synthesize(&[], 0).is_err());
    }

    #[test]
    fn output_is_peak_normalized() {
        let sig = synthesize(&vec![resonance(1.2, 0.1); 10], 5).unwrap();
        let peak = sig.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((peak - OUTPUT_PEAK).abs() < 1e-12);
    }

    #[test]
    fn constant_features_equal_continuous_filtering() {
        let feats = vec![resonance(1.0, 0.2); 6];
        let sig = synthesize(&feats, 9).unwrap();
        let (lsp, _) = feats[0].to_pair();
        let lpc = lsp_to_lpc(&lsp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<f64> = (0..sig.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut y = vec![0.0; sig.len()];
        for n in 0..y.len() {
            let mut v = lpc.gain * noise[n];
            for j in 0..LPC_ORDER {
                if n > j {
                    v -= lpc.coeffs[j] * y[n - 1 - j];
                }
            }
            y[n] = v;
        }
        // the first and last half frames are faded in/out by the window
        let mut fade = vec![1.0; y.len()];
        for n in 0..HOP {
            fade[n] = n as f64 / HOP as f64;
            fade[y.len() - 1 - n] = (n + 1) as f64 / HOP as f64;
        }
        let reference: Vec<f64> = y.iter().zip(&fade).map(|(a, b)| a * b).collect();
        let peak = reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in sig.samples.iter().zip(&reference) {
            assert!((a - b * OUTPUT_PEAK / peak).abs() < 1e-9);
        }
    }

    #[test]
    fn resonance_peak_lands_at_expected_frequency() {
        let center = 0.5;
        let sig = synthesize(&vec![resonance(center, 0.5); 75], 3).unwrap();
        let expect_hz = center * 8000.0 / (2.0 * PI);
        let (best_hz, _) = (0..=800)
            .map(|i| i as f64 * 5.0)
            .map(|hz| {
                // light smoothing over neighbouring bins
                let p: f64 = [-10.0, -5.0, 0.0, 5.0, 10.0].iter().map(|d| power_at(&sig.samples, hz + d)).sum();
                (hz, p)
            })
            .fold((0.0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
        assert!((best_hz - expect_hz).abs() <= 50.0, "peak at {best_hz} Hz, expected {expect_hz}");
    }

    #[test]
    fn sanitize_orders_and_clamps() {
        let raw = LspFrame {
            gain: -1.0,
            freqs: [4.0, -1.0, 0.5, 0.5, f64::NAN, 2.0, 2.0, 1.0],
        };
        let s = sanitize_lsp(&raw);
        assert_eq!(s.gain, 0.0);
        assert!(s.is_ordered());
        assert!(s.freqs[0] >= 0.001 && s.freqs[7] <= PI - 0.001);
        assert!(s.freqs.windows(2).all(|p| p[1] - p[0] >= 1e-4 - 1e-15));
    }

    proptest! {
        #[test]
        fn arbitrary_features_synthesize_finite_bounded(
            raw in prop::collection::vec(-4.0f64..4.0, FEATURE_DIM * 4),
            seed in 0u64..1000,
        ) {
            let feats: Vec<SoundFeatureVector> = raw
                .chunks_exact(FEATURE_DIM)
                .map(|c| {
                    let mut v = [0.0; FEATURE_DIM];
                    v.copy_from_slice(c);
                    SoundFeatureVector(v)
                })
                .collect();
            let sig = synthesize(&feats, seed).unwrap();
            prop_assert_eq!(sig.len(), synthesized_len(feats.len()));
            prop_assert!(sig.samples.iter().all(|x| x.is_finite() && x.abs() <= OUTPUT_PEAK + 1e-12));
        }
    }
}
