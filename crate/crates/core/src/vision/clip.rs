use super::{crop_scale_to, CropSpec, FrameImage, ScaledFrame, CLIP_SIZE};
use crate::{Error, Result};

/// Context lengths the network is trained with.
pub const VALID_CONTEXT: [usize; 5] = [1, 3, 5, 7, 9];

/// `K` consecutive square frames centred on `center`, stored frame-major
/// (oldest first), each frame row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    pub k: usize,
    pub center: usize,
    pub side: usize,
    pub voxels: Vec<f64>,
}

impl VideoClip {
    pub fn frame(&self, j: usize) -> &[f64] {
        let n = self.side * self.side;
        &self.voxels[j * n..(j + 1) * n]
    }

    /// Mean with a second correction pass, exact for constant clips.
    pub fn mean(&self) -> f64 {
        let n = self.voxels.len() as f64;
        let rough = self.voxels.iter().sum::<f64>() / n;
        rough + self.voxels.iter().map(|v| v - rough).sum::<f64>() / n
    }
}

/// Divide by the 8-bit maximum and subtract the clip's scalar mean.
pub fn normalize_clip(clip: &mut VideoClip) {
    clip.voxels.iter_mut().for_each(|v| *v /= 255.0);
    let mean = clip.mean();
    clip.voxels.iter_mut().for_each(|v| *v -= mean);
}

fn check_context(k: usize, center: usize, len: usize) -> Result<()> {
    if k % 2 == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "context length must be odd, got {k}"
        )));
    }
    if center >= len {
        return Err(Error::InvalidArgument(format!(
            "frame index {center} out of range for {len} frames"
        )));
    }
    Ok(())
}

/// Source frame indices for a clip, replicating the first/last frame past
/// the sequence edges.
pub(crate) fn context_indices(center: usize, k: usize, len: usize) -> impl Iterator<Item = usize> {
    let half = (k / 2) as isize;
    (-half..=half).map(move |d| (center as isize + d).clamp(0, len as isize - 1) as usize)
}

/// Build the normalized clip for `center` from frames that were already
/// cropped and scaled.
pub fn clip_from_scaled(frames: &[ScaledFrame], center: usize, k: usize) -> Result<VideoClip> {
    check_context(k, center, frames.len())?;
    let side = frames[center].side;
    let mut voxels = Vec::with_capacity(k * side * side);
    for idx in context_indices(center, k, frames.len()) {
        if frames[idx].side != side {
            return Err(Error::Shape("scaled frames differ in size".into()));
        }
        voxels.extend(frames[idx].pixels.iter().map(|&v| v as f64));
    }
    let mut clip = VideoClip { k, center, side, voxels };
    normalize_clip(&mut clip);
    Ok(clip)
}

/// Crop, scale to 128×128 and normalize the `k` frames around `center`.
pub fn assemble_clip(frames: &[FrameImage], center: usize, k: usize, crop: &CropSpec) -> Result<VideoClip> {
    assemble_clip_to(frames, center, k, crop, CLIP_SIZE)
}

/// As [`assemble_clip`] with a `side`×`side` output.
pub fn assemble_clip_to(
    frames: &[FrameImage],
    center: usize,
    k: usize,
    crop: &CropSpec,
    side: usize,
) -> Result<VideoClip> {
    check_context(k, center, frames.len())?;
    let mut voxels = Vec::with_capacity(k * side * side);
    for idx in context_indices(center, k, frames.len()) {
        voxels.extend(crop_scale_to(&frames[idx], crop, side).pixels.iter().map(|&v| v as f64));
    }
    let mut clip = VideoClip { k, center, side, voxels };
    normalize_clip(&mut clip);
    Ok(clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::CropRegion;

    fn numbered(n: usize) -> Vec<FrameImage> {
        (0..n).map(|i| FrameImage::filled(128, 128, i as u8)).collect()
    }

    #[test]
    fn single_frame_context() {
        let frames = numbered(10);
        let indices: Vec<_> = context_indices(4, 1, 10).collect();
        assert_eq!(indices, vec![4]);
        let crop = CropSpec::for_region(CropRegion::FullFace);
        let clip = assemble_clip(&frames, 4, 1, &crop).unwrap();
        assert_eq!(clip.voxels.len(), 128 * 128);
    }

    #[test]
    fn edges_replicate() {
        assert_eq!(context_indices(0, 5, 75).collect::<Vec<_>>(), vec![0, 0, 0, 1, 2]);
        assert_eq!(context_indices(74, 5, 75).collect::<Vec<_>>(), vec![72, 73, 74, 74, 74]);
        assert_eq!(context_indices(37, 9, 75).collect::<Vec<_>>(), (33..=41).collect::<Vec<_>>());
    }

    #[test]
    fn clip_values_follow_context() {
        let frames: Vec<FrameImage> = (0..75).map(|i| FrameImage::filled(128, 128, (2 * i) as u8)).collect();
        let crop = CropSpec::for_region(CropRegion::FullFace);
        let clip = assemble_clip(&frames, 0, 5, &crop).unwrap();
        // raw values 0,0,0,2,4 -> /255 -> minus mean 1.2/255
        let expect = [0.0, 0.0, 0.0, 2.0, 4.0].map(|v: f64| (v - 1.2) / 255.0);
        for (j, e) in expect.iter().enumerate() {
            assert!(clip.frame(j).iter().all(|v| (v - e).abs() < 1e-12));
        }
        assert_eq!(clip.center, 0);
    }

    #[test]
    fn center_alignment_with_k1() {
        let frames: Vec<FrameImage> = (0..5)
            .map(|i| FrameImage::new(64, 64, (0..64 * 64).map(|p| ((p * (i + 1)) % 256) as u8).collect()).unwrap())
            .collect();
        let crop = CropSpec::for_region(CropRegion::Mouth);
        let clip = assemble_clip(&frames, 3, 1, &crop).unwrap();
        let mut alone = VideoClip {
            k: 1,
            center: 3,
            side: 128,
            voxels: crate::vision::crop_scale(&frames[3], &crop).pixels.iter().map(|&v| v as f64).collect(),
        };
        normalize_clip(&mut alone);
        assert_eq!(clip, alone);
    }

    #[test]
    fn reduced_side_matches_prescaled_path() {
        let frames: Vec<FrameImage> = (0..6)
            .map(|i| FrameImage::new(96, 80, (0..96 * 80).map(|p| ((p * 3 + i * 17) % 256) as u8).collect()).unwrap())
            .collect();
        let crop = CropSpec::for_region(CropRegion::Mouth);
        let direct = assemble_clip_to(&frames, 2, 3, &crop, 32).unwrap();
        let scaled: Vec<ScaledFrame> = frames.iter().map(|f| crop_scale_to(f, &crop, 32)).collect();
        assert_eq!(direct, clip_from_scaled(&scaled, 2, 3).unwrap());
        assert_eq!(direct.frame(2).len(), 32 * 32);
    }

    #[test]
    fn normalization() {
        let mut c = VideoClip {
            k: 1,
            center: 0,
            side: 128,
            voxels: vec![128.0; 128 * 128],
        };
        normalize_clip(&mut c);
        assert!(c.voxels.iter().all(|&v| v == 0.0));

        let mut two = VideoClip {
            k: 1,
            center: 0,
            side: 128,
            voxels: (0..128 * 128).map(|i| if i % 2 == 0 { 0.0 } else { 255.0 }).collect(),
        };
        normalize_clip(&mut two);
        assert!(two.voxels.iter().all(|&v| (v.abs() - 0.5).abs() < 1e-12));
        assert!(two.mean().abs() < 1e-9);
    }

    #[test]
    fn bad_arguments() {
        let frames = numbered(5);
        let crop = CropSpec::for_region(CropRegion::FullFace);
        assert!(assemble_clip(&frames, 5, 3, &crop).is_err());
        assert!(assemble_clip(&frames, 2, 4, &crop).is_err());
    }
}
