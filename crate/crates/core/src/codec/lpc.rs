use super::LPC_ORDER;
use crate::{Error, Result};

/// All-pole filter `1 / A(z)` with `A(z) = 1 + sum_k coeffs[k-1] z^-k`, plus
/// the residual RMS gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpcFrame {
    pub coeffs: [f64; LPC_ORDER],
    pub gain: f64,
}

impl LpcFrame {
    pub const SILENCE: LpcFrame = LpcFrame {
        coeffs: [0.0; LPC_ORDER],
        gain: 0.0,
    };

    /// Full denominator polynomial `[1, a1, .., a8]`.
    pub fn polynomial(&self) -> [f64; LPC_ORDER + 1] {
        let mut a = [0.0; LPC_ORDER + 1];
        a[0] = 1.0;
        a[1..].copy_from_slice(&self.coeffs);
        a
    }
}

/// Hamming window scaled to unit mean square, so that windowed energy per
/// sample matches the energy of the unwindowed frame.
pub fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    let raw: Vec<f64> = (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
        .collect();
    let ms = raw.iter().map(|w| w * w).sum::<f64>() / len as f64;
    let scale = ms.sqrt().recip();
    raw.into_iter().map(|w| w * scale).collect()
}

/// 8th-order autocorrelation LPC of one analysis frame.
///
/// The frame is Hamming-windowed, its autocorrelation up to lag 8 is solved
/// with Levinson-Durbin, and the gain is `sqrt(final_error / frame_len)`.
/// An all-zero frame yields [`LpcFrame::SILENCE`].
pub fn lpc_analyze(frame: &[f64]) -> Result<LpcFrame> {
    if frame.len() <= LPC_ORDER {
        return Err(Error::SignalTooShort {
            len: frame.len(),
            needed: LPC_ORDER + 1,
        });
    }
    if frame.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample in frame".into()));
    }
    let window = hamming_window(frame.len());
    let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
    let r = autocorrelation(&windowed, LPC_ORDER);
    if r[0] <= f64::MIN_POSITIVE {
        return Ok(LpcFrame::SILENCE);
    }
    let (a, err) = levinson_durbin(&r);
    let mut coeffs = [0.0; LPC_ORDER];
    coeffs.copy_from_slice(&a[1..]);
    Ok(LpcFrame {
        coeffs,
        gain: (err.max(0.0) / frame.len() as f64).sqrt(),
    })
}

pub(crate) fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            x.iter()
                .zip(x.iter().skip(lag))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Levinson-Durbin recursion on `r[0..=p]`. Returns `[1, a1..ap]` and the
/// final prediction error. The recursion stops early (keeping the lower-order
/// solution) if a reflection coefficient reaches the unit circle, which only
/// happens for numerically singular autocorrelations.
pub(crate) fn levinson_durbin(r: &[f64]) -> (Vec<f64>, f64) {
    let p = r.len() - 1;
    let mut a = vec![0.0; p + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=p {
        let acc: f64 = r[i] + (1..i).map(|j| prev[j] * r[i - j]).sum::<f64>();
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            break;
        }
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        prev.copy_from_slice(&a);
    }
    (prev, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Solves the Toeplitz normal equations `R a = -r` by Gaussian elimination.
    fn normal_equations_oracle(r: &[f64]) -> Vec<f64> {
        let p = r.len() - 1;
        let mut m: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let mut row: Vec<f64> = (0..p).map(|j| r[i.abs_diff(j)]).collect();
                row.push(-r[i + 1]);
                row
            })
            .collect();
        for col in 0..p {
            let piv = (col..p)
                .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
                .unwrap();
            m.swap(col, piv);
            for row in 0..p {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for c in col..=p {
                        m[row][c] -= f * m[col][c];
                    }
                }
            }
        }
        (0..p).map(|i| m[i][p] / m[i][i]).collect()
    }

    fn white(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn silence_frame() {
        let lpc = lpc_analyze(&[0.0; 320]).unwrap();
        assert_eq!(lpc, LpcFrame::SILENCE);
    }

    #[test]
    fn window_has_unit_mean_square() {
        let w = hamming_window(320);
        let ms = w.iter().map(|x| x * x).sum::<f64>() / 320.0;
        assert!((ms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levinson_matches_direct_solve() {
        for seed in 0..20 {
            let x = white(seed, 320);
            let w = hamming_window(320);
            let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
            let r = autocorrelation(&xw, LPC_ORDER);
            let lpc = lpc_analyze(&x).unwrap();
            let oracle = normal_equations_oracle(&r);
            for (a, b) in lpc.coeffs.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn ar1_process_recovers_pole() {
        let seeds = 200;
        let mut mean = [0.0; LPC_ORDER];
        for seed in 0..seeds {
            let e = white(1000 + seed, 520);
            let mut x = vec![0.0; 520];
            for n in 1..520 {
                x[n] = 0.9 * x[n - 1] + e[n];
            }
            // drop the burn-in so the frame is close to stationary
            let lpc = lpc_analyze(&x[200..]).unwrap();
            for (m, c) in mean.iter_mut().zip(lpc.coeffs) {
                *m += c / seeds as f64;
            }
        }
        assert!((mean[0] + 0.9).abs() < 0.05, "a1 = {}", mean[0]);
        for &c in &mean[1..] {
            assert!(c.abs() < 0.05, "higher coefficient {c}");
        }
    }

    #[test]
    fn white_noise_is_nearly_flat() {
        for seed in 0..10 {
            let x: Vec<f64> = white(seed, 320).iter().map(|v| 0.3 * v).collect();
            let rms = (x.iter().map(|v| v * v).sum::<f64>() / 320.0).sqrt();
            let lpc = lpc_analyze(&x).unwrap();
            assert!(lpc.coeffs.iter().all(|c| c.abs() < 0.35), "{:?}", lpc.coeffs);
            assert!((lpc.gain / rms - 1.0).abs() < 0.2, "gain {} rms {rms}", lpc.gain);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = vec![0.1; 320];
        x[7] = f64::NAN;
        assert!(lpc_analyze(&x).is_err());
    }
}
