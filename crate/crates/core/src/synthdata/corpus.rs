use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::articulation::ground_truth_features;
use super::{digit_trajectory, render_face, FaceTexture};
use crate::codec::{synthesize, write_features_csv, write_wav};
use crate::vision::{frame_file_name, write_pgm, Manifest, ManifestEntry, DIGIT_WORDS};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.tsv";

const COMMANDS: [&str; 4] = ["bin", "lay", "place", "set"];
const COLORS: [&str; 4] = ["blue", "green", "red", "white"];
const PREPOSITIONS: [&str; 4] = ["at", "by", "in", "with"];
const ADVERBS: [&str; 4] = ["again", "now", "please", "soon"];

/// Seed for sequence `index`, independent of how many sequences exist.
pub fn sequence_seed(corpus_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(corpus_seed);
    rng.set_stream(index as u64 + 1);
    rng.random()
}

/// A six-word sentence with the given digit in the fifth slot.
pub fn sentence_words(digit: u8, rng: &mut impl Rng) -> [String; 6] {
    let letter = loop {
        let c = rng.random_range(b'a'..=b'z');
        if c != b'w' {
            break (c as char).to_string();
        }
    };
    let pick = |rng: &mut dyn FnMut() -> usize, set: &[&str]| set[rng() % set.len()].to_string();
    let mut draw = || rng.random_range(0..4usize);
    [
        pick(&mut draw, &COMMANDS),
        pick(&mut draw, &COLORS),
        pick(&mut draw, &PREPOSITIONS),
        letter,
        DIGIT_WORDS[usize::from(digit % 10)].to_string(),
        pick(&mut draw, &ADVERBS),
    ]
}

/// Digit labels: every block of ten sequences is a seeded permutation of
/// 0..9, so the labels are balanced whenever `n` is a multiple of ten.
fn labels(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6265_6c73);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut block: Vec<u8> = (0..10).collect();
        block.shuffle(&mut rng);
        out.extend(block.into_iter().take(n - out.len()));
    }
    out
}

fn write_sequence(root: &Path, index: usize, digit: u8, corpus_seed: u64) -> Result<ManifestEntry> {
    let seed = sequence_seed(corpus_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = format!("s{index:04}");
    let dir = root.join(&id);
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir)?;

    let words = sentence_words(digit, &mut rng);
    let traj = digit_trajectory(digit, &mut rng);
    let texture = FaceTexture::new(rng.random());
    for (j, s) in traj.iter().enumerate() {
        write_pgm(frames_dir.join(frame_file_name(j)), &render_face(s, &texture))?;
    }
    let truth = ground_truth_features(&traj);
    let features = dir.join("features.csv");
    write_features_csv(&features, &truth)?;
    let wav = dir.join("audio.wav");
    write_wav(&wav, &synthesize(&truth, rng.random())?)?;
    Ok(ManifestEntry {
        id,
        frames_dir,
        wav,
        features: Some(features),
        words,
    })
}

/// Writes `n` sentences under `root` (one directory each: `frames/`,
/// `audio.wav`, `features.csv`) plus `manifest.tsv`, and returns the
/// manifest. Output is a pure function of `n` and `seed`.
pub fn generate_corpus(root: impl AsRef<Path>, n: usize, seed: u64) -> Result<Manifest> {
    let root = root.as_ref();
    if n < 10 {
        return Err(Error::InvalidArgument(format!("corpus needs at least 10 sequences, got {n}")));
    }
    fs::create_dir_all(root)?;
    let labels = labels(n, seed);
    let entries = labels
        .par_iter()
        .enumerate()
        .map(|(i, &d)| write_sequence(root, i, d, seed))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { entries };
    manifest.save(root.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_signal, read_features_csv, read_wav};
    use crate::vision::load_frames;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate_corpus(a.path(), 20, 7).unwrap();
        generate_corpus(b.path(), 20, 7).unwrap();
        let (ta, tb) = (tree(a.path()), tree(b.path()));
        assert_eq!(ta.len(), 20 * 77 + 1);
        assert!(ta == tb);
    }

    #[test]
    fn labels_are_balanced_and_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_corpus(dir.path(), 20, 3).unwrap();
        let mut counts = [0; 10];
        for e in &m.entries {
            counts[e.digit().unwrap() as usize] += 1;
        }
        assert_eq!(counts, [2; 10]);
        let loaded = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded, m);
        let frames = load_frames(&m.entries[0].frames_dir).unwrap();
        assert_eq!(frames.len(), 75);
        assert_eq!((frames[0].width, frames[0].height), (128, 128));
    }

    #[test]
    fn too_small_corpus_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(generate_corpus(dir.path(), 9, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn codec_recovers_generating_lsps() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_corpus(dir.path(), 10, 11).unwrap();
        let (mut sum, mut count) = (0.0, 0usize);
        for e in &m.entries {
            let truth = read_features_csv(e.features.as_ref().unwrap()).unwrap();
            let audio = read_wav(&e.wav).unwrap();
            let got = encode_signal(&audio, truth.len()).unwrap();
            for (t, g) in truth.iter().zip(&got) {
                let (t0, t1) = t.to_pair();
                let (g0, g1) = g.to_pair();
                for (tl, gl) in [(t0, g0), (t1, g1)] {
                    if tl.gain > 0.1 {
                        sum += tl.freqs.iter().zip(&gl.freqs).map(|(a, b)| (a - b).abs()).sum::<f64>();
                        count += 8;
                    }
                }
            }
        }
        assert!(count > 0);
        let mae = sum / count as f64;
        assert!(mae < 0.05, "mean LSP error {mae}");
    }

    #[test]
    fn words_follow_the_grid_grammar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 0..10 {
            let w = sentence_words(d, &mut rng);
            assert!(COMMANDS.contains(&w[0].as_str()));
            assert_eq!(w[3].len(), 1);
            assert_eq!(w[4], DIGIT_WORDS[d as usize]);
        }
    }
}
