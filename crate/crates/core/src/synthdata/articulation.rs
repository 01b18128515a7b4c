use std::f64::consts::PI;

use rand::Rng;

use crate::codec::{LspFrame, SoundFeatureVector, LPC_ORDER};
use crate::{Error, Result};

/// Video frames per synthetic sentence (3 s at 25 fps).
pub const SEQUENCE_FRAMES: usize = 75;
/// Largest change of either articulation parameter between video frames.
pub const MAX_FRAME_DELTA: f64 = 0.2;
/// How far, in video frames, the visible articulation runs ahead of the
/// sound it produces.
pub const VISUAL_LEAD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArticulatoryState {
    pub mouth_open: f64,
    pub mouth_wide: f64,
}

impl ArticulatoryState {
    pub fn new(mouth_open: f64, mouth_wide: f64) -> Result<Self> {
        let s = Self { mouth_open, mouth_wide };
        if !s.is_valid() {
            return Err(Error::InvalidArgument(format!(
                "articulation ({mouth_open}, {mouth_wide}) outside [0, 1]"
            )));
        }
        Ok(s)
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.mouth_open) && (0.0..=1.0).contains(&self.mouth_wide)
    }

    fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            mouth_open: self.mouth_open + (other.mouth_open - self.mouth_open) * t,
            mouth_wide: self.mouth_wide + (other.mouth_wide - self.mouth_wide) * t,
        }
    }
}

/// The known visual-to-acoustic map. Opening the mouth raises the gain and
/// the lowest line frequency; widening it separates the first pair and
/// skews the spacing of the upper six lines.
pub fn articulation_to_filter(s: &ArticulatoryState) -> LspFrame {
    let open = s.mouth_open.clamp(0.0, 1.0);
    let wide = s.mouth_wide.clamp(0.0, 1.0);
    let mut freqs = [0.0; LPC_ORDER];
    freqs[0] = 0.2 + 0.8 * open;
    freqs[1] = freqs[0] + 0.3 + 0.5 * wide;
    let gamma = 1.0 + 0.8 * (wide - 0.5);
    let base = freqs[1];
    for (k, f) in freqs.iter_mut().enumerate().skip(2) {
        let t = (k - 1) as f64 / 7.0;
        *f = base + (PI - base) * t.powf(gamma);
    }
    LspFrame {
        gain: 0.05 + 0.5 * open,
        freqs,
    }
}

fn state_at(traj: &[ArticulatoryState], pos: f64) -> ArticulatoryState {
    let last = traj.len() - 1;
    let pos = pos.clamp(0.0, last as f64);
    let i = (pos.floor() as usize).min(last);
    let j = (i + 1).min(last);
    traj[i].lerp(&traj[j], pos - i as f64)
}

/// Two filters per video frame. Audio frame `k` is centred at
/// `(k + 1) / 2` video frames and sounds the articulation shown
/// [`VISUAL_LEAD`] frames later, interpolated between frames and held at
/// the end of the sequence.
pub fn audio_frame_filters(traj: &[ArticulatoryState]) -> Vec<LspFrame> {
    if traj.is_empty() {
        return Vec::new();
    }
    (0..2 * traj.len())
        .map(|k| articulation_to_filter(&state_at(traj, (k + 1) as f64 / 2.0 + VISUAL_LEAD)))
        .collect()
}

/// Ground-truth sound features: consecutive filter pairs.
pub fn ground_truth_features(traj: &[ArticulatoryState]) -> Vec<SoundFeatureVector> {
    audio_frame_filters(traj)
        .chunks_exact(2)
        .map(|p| SoundFeatureVector::from_pair(&p[0], &p[1]))
        .collect()
}

struct Wave {
    amp: f64,
    cycles: f64,
    phase: f64,
}

impl Wave {
    fn at(&self, t: f64) -> f64 {
        self.amp * (2.0 * PI * self.cycles * t / SEQUENCE_FRAMES as f64 + self.phase).sin()
    }
}

/// Articulation trajectory for one sentence: the digit picks a template
/// (two sinusoids with digit-specific rates and phases) and `rng` jitters
/// its amplitude, rate and phase and adds a slow wobble.
pub fn digit_trajectory(digit: u8, rng: &mut impl Rng) -> Vec<ArticulatoryState> {
    let d = f64::from(digit % 10);
    let mut jitter = |w: Wave| Wave {
        amp: w.amp * rng.random_range(0.9..1.1),
        cycles: w.cycles * rng.random_range(0.95..1.05),
        phase: w.phase + rng.random_range(-0.4..0.4),
    };
    let open = jitter(Wave { amp: 0.42, cycles: 1.0 + 0.3 * d, phase: 0.7 * d });
    let wide = jitter(Wave { amp: 0.4, cycles: 2.2 - 0.15 * d, phase: 1.3 * d + 0.5 });
    let wobble_open = Wave {
        amp: 0.04,
        cycles: rng.random_range(0.5..2.0),
        phase: rng.random_range(0.0..2.0 * PI),
    };
    let wobble_wide = Wave {
        amp: 0.04,
        cycles: rng.random_range(0.5..2.0),
        phase: rng.random_range(0.0..2.0 * PI),
    };
    let mut out: Vec<ArticulatoryState> = Vec::with_capacity(SEQUENCE_FRAMES);
    for j in 0..SEQUENCE_FRAMES {
        let t = j as f64;
        let mut s = ArticulatoryState {
            mouth_open: (0.5 + open.at(t) + wobble_open.at(t)).clamp(0.0, 1.0),
            mouth_wide: (0.5 + wide.at(t) + wobble_wide.at(t)).clamp(0.0, 1.0),
        };
        // the templates already move slower than this; the clamp guards the bound
        if let Some(prev) = out.last() {
            let limit = |v: f64, p: f64| v.clamp(p - MAX_FRAME_DELTA, p + MAX_FRAME_DELTA);
            s.mouth_open = limit(s.mouth_open, prev.mouth_open);
            s.mouth_wide = limit(s.mouth_wide, prev.mouth_wide);
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{lpc_to_lsp, lsp_to_lpc};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_narrow_mouth_values() {
        let f = articulation_to_filter(&ArticulatoryState::new(0.0, 0.0).unwrap());
        assert!((f.freqs[0] - 0.2).abs() < 1e-12);
        assert!((f.freqs[1] - 0.5).abs() < 1e-12);
        assert!((f.gain - 0.05).abs() < 1e-12);
    }

    #[test]
    fn state_range_checked() {
        assert!(ArticulatoryState::new(1.2, 0.5).is_err());
        assert!(ArticulatoryState::new(0.5, -0.1).is_err());
    }

    #[test]
    fn trajectories_are_bounded_and_smooth() {
        for digit in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(digit as u64);
            let t = digit_trajectory(digit, &mut rng);
            assert_eq!(t.len(), SEQUENCE_FRAMES);
            assert!(t.iter().all(ArticulatoryState::is_valid));
            for w in t.windows(2) {
                assert!((w[1].mouth_open - w[0].mouth_open).abs() <= MAX_FRAME_DELTA);
                assert!((w[1].mouth_wide - w[0].mouth_wide).abs() <= MAX_FRAME_DELTA);
            }
        }
    }

    #[test]
    fn templates_differ_between_digits() {
        let mean_traj = |digit| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            digit_trajectory(digit, &mut rng)
        };
        for a in 0..10u8 {
            for b in (a + 1)..10 {
                let (ta, tb) = (mean_traj(a), mean_traj(b));
                let dist: f64 = ta
                    .iter()
                    .zip(&tb)
                    .map(|(x, y)| (x.mouth_open - y.mouth_open).abs() + (x.mouth_wide - y.mouth_wide).abs())
                    .sum::<f64>()
                    / SEQUENCE_FRAMES as f64;
                assert!(dist > 0.1, "digits {a} and {b} too similar ({dist})");
            }
        }
    }

    #[test]
    fn audio_timing_interpolates() {
        let traj: Vec<ArticulatoryState> = (0..4)
            .map(|j| ArticulatoryState::new(j as f64 / 4.0, 1.0 - j as f64 / 4.0).unwrap())
            .collect();
        let f = audio_frame_filters(&traj);
        assert_eq!(f.len(), 8);
        // audio frame 0 sounds video position 0.5 + lead, halfway between two frames
        let at = |p: f64| articulation_to_filter(&ArticulatoryState::new(p / 4.0, 1.0 - p / 4.0).unwrap());
        assert_eq!(VISUAL_LEAD, 1.0);
        assert_eq!(f[0], at(1.5));
        assert_eq!(f[1], at(2.0));
        assert_eq!(f[3], at(3.0));
        // held past the last frame
        assert_eq!(f[7], at(3.0));
        assert_eq!(ground_truth_features(&traj).len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn filters_ordered_and_round_trip(open in 0.0f64..=1.0, wide in 0.0f64..=1.0) {
            let f = articulation_to_filter(&ArticulatoryState { mouth_open: open, mouth_wide: wide });
            prop_assert!(f.is_ordered());
            prop_assert!(f.freqs[0] > 0.0 && f.freqs[7] < PI);
            let back = lpc_to_lsp(&lsp_to_lpc(&f).unwrap()).unwrap();
            for (a, b) in back.freqs.iter().zip(&f.freqs) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
