//! Deterministic synthetic audiovisual corpus.
//!
//! A cartoon face whose mouth opens and widens over time stands in for real
//! recordings. The same two articulation parameters drive a known LSP
//! filter, so the mapping from pixels to sound features is exact and a
//! trained network can be scored against ground truth.

mod articulation;
mod corpus;
mod render;

pub use articulation::{
    articulation_to_filter, audio_frame_filters, digit_trajectory, ground_truth_features, ArticulatoryState, MAX_FRAME_DELTA,
    VISUAL_LEAD,
    SEQUENCE_FRAMES,
};
pub use corpus::{generate_corpus, sequence_seed, sentence_words, MANIFEST_FILE};
pub use render::{render_face, FaceTexture, FACE_SIZE};
