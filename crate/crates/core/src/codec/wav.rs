use std::f64::consts::PI;
use std::path::Path;

use super::{AudioSignal, SAMPLE_RATE};
use crate::{Error, Result};

const SINC_ZERO_CROSSINGS: f64 = 32.0;
const CUTOFF_FRACTION: f64 = 0.9;

fn wav_err(path: &Path, reason: impl ToString) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Read a mono 16-bit PCM WAV file and bring it to 8 kHz. Higher input
/// rates are low-pass filtered and resampled; rates below 8 kHz are rejected.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(wav_err(
            path,
            format!(
                "unsupported encoding: {:?} {}-bit (need 16-bit PCM)",
                spec.sample_format, spec.bits_per_sample
            ),
        ));
    }
    if spec.channels != 1 {
        return Err(wav_err(
            path,
            format!("unsupported channel count {} (need mono)", spec.channels),
        ));
    }
    if spec.sample_rate < SAMPLE_RATE {
        return Err(wav_err(
            path,
            format!("unsupported sample rate {} Hz", spec.sample_rate),
        ));
    }
    let expected = reader.len() as usize;
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| wav_err(path, e))?;
    if samples.len() != expected {
        return Err(wav_err(path, "truncated data chunk"));
    }
    let signal = AudioSignal::new(samples, spec.sample_rate);
    Ok(resample(&signal, SAMPLE_RATE))
}

/// Write an 8 kHz signal as mono 16-bit PCM, clipping to the i16 range.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let path = path.as_ref();
    if signal.sample_rate != SAMPLE_RATE {
        return Err(wav_err(
            path,
            format!("writer expects {SAMPLE_RATE} Hz, got {}", signal.sample_rate),
        ));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &x in &signal.samples {
        let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))?;
    Ok(())
}

/// Band-limited resampling by windowed-sinc interpolation. When
/// downsampling, the kernel cutoff sits at 90% of the output Nyquist so the
/// interpolation doubles as the anti-alias filter.
pub fn resample(signal: &AudioSignal, target_rate: u32) -> AudioSignal {
    if signal.sample_rate == target_rate || signal.is_empty() {
        return AudioSignal::new(signal.samples.clone(), target_rate);
    }
    let ratio = target_rate as f64 / signal.sample_rate as f64;
    // cutoff in cycles per input sample, relative to input Nyquist
    let fc = CUTOFF_FRACTION * ratio.min(1.0);
    let half_width = SINC_ZERO_CROSSINGS / fc;
    let x = &signal.samples;
    let out_len = ((x.len() as f64) * ratio).floor() as usize;
    let samples = (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = ((t - half_width).ceil().max(0.0)) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len() - 1);
            (lo..=hi)
                .map(|n| {
                    let d = t - n as f64;
                    x[n] * fc * sinc(fc * d) * blackman(d / half_width)
                })
                .sum()
        })
        .collect();
    AudioSignal::new(samples, target_rate)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Blackman window on `u` in [-1, 1].
fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let t = PI * (u + 1.0);
    0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos()
}
