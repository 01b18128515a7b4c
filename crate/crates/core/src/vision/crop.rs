use std::fmt;
use std::str::FromStr;

use super::FrameImage;
use crate::{Error, Result};

/// Side length of the network input frames.
pub const CLIP_SIZE: usize = 128;

/// Fractional bounding box `[x0, x1) × [y0, y1)` inside a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const FULL: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn strictly_inside(&self, outer: &Rect) -> bool {
        self.x0 > outer.x0 && self.y0 > outer.y0 && self.x1 < outer.x1 && self.y1 < outer.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CropRegion {
    FullFace,
    Mouth,
}

impl CropRegion {
    pub const ALL: [CropRegion; 2] = [CropRegion::FullFace, CropRegion::Mouth];

    pub fn as_str(&self) -> &'static str {
        match self {
            CropRegion::FullFace => "full_face",
            CropRegion::Mouth => "mouth",
        }
    }
}

impl fmt::Display for CropRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CropRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full_face" | "face" => Ok(CropRegion::FullFace),
            "mouth" => Ok(CropRegion::Mouth),
            other => Err(Error::InvalidArgument(format!(
                "unknown crop region {other:?} (expected full_face or mouth)"
            ))),
        }
    }
}

/// Which part of the source frame feeds the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropSpec {
    pub region: CropRegion,
    pub rect: Rect,
}

impl CropSpec {
    /// Fixed mouth mask used for the synthetic faces: lower-centre box.
    pub const MOUTH_RECT: Rect = Rect {
        x0: 0.25,
        y0: 0.55,
        x1: 0.75,
        y1: 0.92,
    };

    pub fn new(region: CropRegion, rect: Rect) -> Result<Self> {
        if !rect.is_valid() {
            return Err(Error::InvalidArgument(format!("invalid crop rect {rect:?}")));
        }
        Ok(Self { region, rect })
    }

    /// Default rect for a region: the whole frame for the face, the fixed
    /// mouth mask otherwise.
    pub fn for_region(region: CropRegion) -> Self {
        match region {
            CropRegion::FullFace => Self {
                region,
                rect: Rect::FULL,
            },
            CropRegion::Mouth => Self {
                region,
                rect: Self::MOUTH_RECT,
            },
        }
    }

    /// Pair a face rect with a mouth rect expressed relative to it. The
    /// mouth must lie strictly inside the face.
    pub fn pair(face: Rect, mouth_in_face: Rect) -> Result<(Self, Self)> {
        let face = Self::new(CropRegion::FullFace, face)?;
        let m = Self::new(CropRegion::Mouth, mouth_in_face)?;
        let w = face.rect.x1 - face.rect.x0;
        let h = face.rect.y1 - face.rect.y0;
        let mouth = Rect {
            x0: face.rect.x0 + m.rect.x0 * w,
            y0: face.rect.y0 + m.rect.y0 * h,
            x1: face.rect.x0 + m.rect.x1 * w,
            y1: face.rect.y0 + m.rect.y1 * h,
        };
        if !mouth.strictly_inside(&face.rect) {
            return Err(Error::InvalidArgument(
                "mouth rect must lie strictly inside the face rect".into(),
            ));
        }
        Ok((face, Self::new(CropRegion::Mouth, mouth)?))
    }
}

/// A square resampled frame, row-major. Values stay on the 0..=255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFrame {
    pub side: usize,
    pub pixels: Vec<f32>,
}

impl ScaledFrame {
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.side + x]
    }
}

/// Bilinear crop-and-scale to 128×128.
pub fn crop_scale(frame: &FrameImage, crop: &CropSpec) -> ScaledFrame {
    crop_scale_to(frame, crop, CLIP_SIZE)
}

/// Bilinear crop-and-scale to `side`×`side`.
///
/// Output pixel centres are spread evenly over the crop rect and mapped to
/// source coordinates with the pixel-centre convention
/// `src = x0 * W + (u + 0.5) * rect_w * W / side - 0.5`; coordinates outside
/// the frame are clamped to the border.
pub fn crop_scale_to(frame: &FrameImage, crop: &CropSpec, side: usize) -> ScaledFrame {
    let (w, h) = (frame.width as f64, frame.height as f64);
    let r = crop.rect;
    let sx = (r.x1 - r.x0) * w / side as f64;
    let sy = (r.y1 - r.y0) * h / side as f64;
    let axis = |origin: f64, scale: f64, len: usize| -> Vec<(usize, usize, f64)> {
        (0..side)
            .map(|u| {
                let s = (origin + (u as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(r.x0 * w, sx, frame.width);
    let ys = axis(r.y0 * h, sy, frame.height);
    let mut out = Vec::with_capacity(side * side);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p00 = frame.get(x0, y0) as f64;
            let p10 = frame.get(x1, y0) as f64;
            let p01 = frame.get(x0, y1) as f64;
            let p11 = frame.get(x1, y1) as f64;
            let top = p00 + (p10 - p00) * fx;
            let bottom = p01 + (p11 - p01) * fx;
            out.push((top + (bottom - top) * fy) as f32);
        }
    }
    ScaledFrame { side, pixels: out }
}
