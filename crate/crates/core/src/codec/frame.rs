use super::AudioSignal;
use crate::{Error, Result};

/// Split `signal` into exactly `target_count` frames of `frame_len` samples,
/// `hop` apart. Frame `k` covers `[k * hop, k * hop + frame_len)`; the signal
/// is zero-padded at the end where the last frames run past it.
pub fn frame_signal(
    signal: &AudioSignal,
    frame_len: usize,
    hop: usize,
    target_count: usize,
) -> Result<Vec<Vec<f64>>> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidArgument(
            "frame length and hop must be positive".into(),
        ));
    }
    if signal.len() < frame_len {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed: frame_len,
        });
    }
    let frames = (0..target_count)
        .map(|k| {
            let start = k * hop;
            let mut frame = vec![0.0; frame_len];
            if start < signal.len() {
                let end = (start + frame_len).min(signal.len());
                frame[..end - start].copy_from_slice(&signal.samples[start..end]);
            }
            frame
        })
        .collect();
    Ok(frames)
}
