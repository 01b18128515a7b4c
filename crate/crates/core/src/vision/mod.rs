//! Video side of the dataset: PGM frames, crop/scale to 128×128 and
//! K-context clip assembly.

mod clip;
mod crop;
mod frames;
mod manifest;

pub use clip::{assemble_clip, assemble_clip_to, clip_from_scaled, normalize_clip, VideoClip, VALID_CONTEXT};
pub use crop::{crop_scale, crop_scale_to, CropRegion, CropSpec, Rect, ScaledFrame, CLIP_SIZE};
pub use frames::{frame_file_name, load_frames, read_pgm, write_pgm, FrameImage};
pub use manifest::{digit_from_word, Manifest, ManifestEntry, DIGIT_WORDS, MANIFEST_HEADER};
