use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ArticulatoryState;
use crate::vision::FrameImage;

/// Width and height of rendered frames.
pub const FACE_SIZE: usize = 128;

const BACKGROUND: f64 = 60.0;
const SKIN: f64 = 180.0;
const EYE: f64 = 40.0;
const MOUTH: f64 = 25.0;
const MOUTH_CENTRE: (f64, f64) = (64.0, 94.0);

/// Fixed per-sequence pixel noise, so sequences look slightly different
/// while every frame of one sequence shares the same texture.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTexture(Vec<f64>);

impl FaceTexture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..FACE_SIZE * FACE_SIZE).map(|_| rng.random_range(-4.0..4.0)).collect())
    }

    pub fn none() -> Self {
        Self(vec![0.0; FACE_SIZE * FACE_SIZE])
    }
}

/// Fraction of the pixel centred at (x, y) covered by the ellipse, using a
/// first-order signed distance for a one-pixel soft edge.
fn coverage(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> f64 {
    let (u, v) = ((x - cx) / a, (y - cy) / b);
    let f = u * u + v * v - 1.0;
    let grad = 2.0 * ((u / a).powi(2) + (v / b).powi(2)).sqrt();
    if grad == 0.0 {
        return if f < 0.0 { 1.0 } else { 0.0 };
    }
    (0.5 - f / grad).clamp(0.0, 1.0)
}

pub fn render_face(state: &ArticulatoryState, texture: &FaceTexture) -> FrameImage {
    let open = state.mouth_open.clamp(0.0, 1.0);
    let wide = state.mouth_wide.clamp(0.0, 1.0);
    let mouth_a = 12.0 + 16.0 * wide;
    let mouth_b = 0.8 + 15.0 * open;
    let mut pixels = Vec::with_capacity(FACE_SIZE * FACE_SIZE);
    for py in 0..FACE_SIZE {
        for px in 0..FACE_SIZE {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let mut v = BACKGROUND;
            let blend = |v: f64, c: f64, target: f64| v + (target - v) * c;
            v = blend(v, coverage(x, y, 64.0, 64.0, 46.0, 58.0), SKIN);
            for ex in [46.0, 82.0] {
                v = blend(v, coverage(x, y, ex, 44.0, 7.0, 5.0), EYE);
            }
            v = blend(v, coverage(x, y, MOUTH_CENTRE.0, MOUTH_CENTRE.1, mouth_a, mouth_b), MOUTH);
            v += texture.0[py * FACE_SIZE + px];
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    FrameImage::new(FACE_SIZE, FACE_SIZE, pixels).expect("size matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::CropSpec;

    fn mouth_pixels(img: &FrameImage) -> Vec<u8> {
        let r = CropSpec::MOUTH_RECT;
        let s = FACE_SIZE as f64;
        let mut out = Vec::new();
        for y in (r.y0 * s) as usize..(r.y1 * s) as usize {
            for x in (r.x0 * s) as usize..(r.x1 * s) as usize {
                out.push(img.get(x, y));
            }
        }
        out
    }

    fn state(open: f64, wide: f64) -> ArticulatoryState {
        ArticulatoryState::new(open, wide).unwrap()
    }

    #[test]
    fn closed_mouth_has_little_dark_area() {
        let tex = FaceTexture::new(1);
        let dark = |s| mouth_pixels(&render_face(&s, &tex)).iter().filter(|&&p| p < 45).count();
        let closed = dark(state(0.0, 0.5));
        let open = dark(state(1.0, 0.5));
        assert!(closed < 100, "closed mouth dark area {closed}");
        assert!(open > 10 * closed.max(1), "open {open} vs closed {closed}");
    }

    #[test]
    fn deterministic() {
        let s = state(0.3, 0.7);
        assert_eq!(render_face(&s, &FaceTexture::new(5)), render_face(&s, &FaceTexture::new(5)));
        assert_ne!(render_face(&s, &FaceTexture::new(5)), render_face(&s, &FaceTexture::new(6)));
    }

    #[test]
    fn opening_darkens_mouth_region() {
        let tex = FaceTexture::new(2);
        let mean = |s| {
            let p = mouth_pixels(&render_face(&s, &tex));
            p.iter().map(|&v| f64::from(v)).sum::<f64>() / p.len() as f64
        };
        let diff = mean(state(0.0, 0.5)) - mean(state(1.0, 0.5));
        assert!(diff > 30.0, "mean intensity difference {diff}");
    }

    #[test]
    fn width_changes_pixels_smoothly() {
        let tex = FaceTexture::none();
        let a = render_face(&state(0.5, 0.50), &tex);
        let b = render_face(&state(0.5, 0.51), &tex);
        let changed = a.pixels.iter().zip(&b.pixels).filter(|(x, y)| x != y).count();
        assert!(changed > 0 && changed < 200);
    }
}
