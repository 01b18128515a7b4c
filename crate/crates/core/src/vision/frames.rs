use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::{Error, Result};

/// Grayscale frame with intensities in [0, 255], row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl FrameImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "frame {width}x{height} with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:04}.pgm")
}

fn image_err(path: &Path, reason: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Read a binary (P5) 8-bit PGM.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<FrameImage> {
    let path = path.as_ref();
    let mut reader = ImageReader::open(path).map_err(|e| image_err(path, e))?;
    reader.set_format(ImageFormat::Pnm);
    let img = reader.decode().map_err(|e| image_err(path, e))?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(image_err(
                path,
                format!("expected 8-bit grayscale, got {:?}", other.color()),
            ))
        }
    };
    let (w, h) = gray.dimensions();
    FrameImage::new(w as usize, h as usize, gray.into_raw())
}

/// Write a binary (P5) PGM with maxval 255.
pub fn write_pgm(path: impl AsRef<Path>, frame: &FrameImage) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)?;
    let encoder = PnmEncoder::new(std::io::BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder
        .write_image(
            &frame.pixels,
            frame.width as u32,
            frame.height as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| image_err(path, e))
}

fn parse_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".pgm")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Load `frame_0000.pgm`, `frame_0001.pgm`, ... from `dir` in index order.
/// Indices must start at 0 and be contiguous.
pub fn load_frames(dir: impl AsRef<Path>) -> Result<Vec<FrameImage>> {
    let dir = dir.as_ref();
    let frames_err = |reason: String| Error::Frames {
        path: dir.to_path_buf(),
        reason,
    };
    let mut found: BTreeMap<usize, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        if let Some(idx) = name.to_str().and_then(parse_index) {
            found.insert(idx, entry.path());
        }
    }
    if found.is_empty() {
        return Err(frames_err("no frame_NNNN.pgm files".into()));
    }
    for (expected, &idx) in found.keys().enumerate() {
        if idx != expected {
            return Err(frames_err(format!("missing frame index {expected}")));
        }
    }
    let frames = found
        .values()
        .map(read_pgm)
        .collect::<Result<Vec<_>>>()?;
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some(i) = frames.iter().position(|f| f.width != w || f.height != h) {
        return Err(frames_err(format!(
            "frame {i} is {}x{}, expected {w}x{h}",
            frames[i].width, frames[i].height
        )));
    }
    Ok(frames)
}
