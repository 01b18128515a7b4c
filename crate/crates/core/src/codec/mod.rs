//! Speech representation: LPC/LSP analysis, feature vectors and unvoiced
//! resynthesis.
//!
//! Audio runs at 8 kHz. Each 40 ms frame (320 samples, hop 160) is reduced to
//! an 8th-order LPC filter plus gain, re-expressed as line spectral
//! frequencies. Two consecutive frames make up one [`SoundFeatureVector`] per
//! video frame.

mod features;
mod frame;
mod lpc;
mod lsp;
mod synth;
mod wav;

pub use features::{
    encode_signal, read_features_csv, write_features_csv, SoundFeatureVector, Standardizer,
    FEATURE_DIM, FEATURE_HEADER, STD_EPSILON,
};
pub use frame::frame_signal;
pub use lpc::{hamming_window, lpc_analyze, LpcFrame};
pub use lsp::{lpc_to_lsp, lsp_to_lpc, LspFrame, LSP_GRID_POINTS};
pub use synth::{sanitize_lsp, synthesize, synthesized_len, OUTPUT_PEAK};
pub use wav::{read_wav, resample, write_wav};

/// Codec sample rate in Hz.
pub const SAMPLE_RATE: u32 = 8000;
/// LPC prediction order.
pub const LPC_ORDER: usize = 8;
/// Analysis frame length (40 ms at 8 kHz).
pub const FRAME_LEN: usize = 320;
/// Hop between analysis frames (20 ms at 8 kHz).
pub const HOP: usize = 160;

/// Mono audio samples with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    /// Signal at the codec rate.
    pub fn at_codec_rate(samples: Vec<f64>) -> Self {
        Self::new(samples, SAMPLE_RATE)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}
