//! Silent-video-to-speech toolkit.
//!
//! Audio is represented per video frame as an 18-element sound feature vector
//! built from two consecutive 8th-order LPC analyses converted to line
//! spectral pairs. A VGG-style convolutional network regresses those vectors
//! from K-frame grayscale clips, and predictions are turned back into audio by
//! driving the all-pole filters with Gaussian white noise.
//!
//! Modules:
//! - [`codec`]: framing, LPC analysis, LSP conversion, standardization,
//!   unvoiced synthesis and WAV I/O.
//! - [`vision`]: PGM frame loading, crop/scale and K-context clip assembly.
//! - [`nn`]: tensors, the convolutional network, backpropagation and Adam.
//! - [`synthdata`]: a deterministic synthetic audiovisual corpus with known
//!   ground truth.
//! - [`pipeline`]: manifests, train/test splits, training, prediction,
//!   evaluation and the K/crop sweep used by the command-line tool.

pub mod codec;
pub mod error;
pub mod nn;
pub mod pipeline;
pub mod synthdata;
pub mod vision;

pub use error::{Error, Result};
