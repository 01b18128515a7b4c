use std::path::{Path, PathBuf};

use crate::{Error, Result};

pub const MANIFEST_HEADER: &str = "# vidspeech manifest v1";
pub const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];
/// Position of the digit word among the six sentence slots.
const DIGIT_SLOT: usize = 4;

pub fn digit_from_word(word: &str) -> Option<u8> {
    DIGIT_WORDS
        .iter()
        .position(|w| w.eq_ignore_ascii_case(word))
        .map(|d| d as u8)
}

/// One recorded sentence: its frame directory, audio and six-word label
/// (command, color, preposition, letter, digit, adverb).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub frames_dir: PathBuf,
    pub wav: PathBuf,
    /// Ground-truth feature CSV when the corpus is synthetic.
    pub features: Option<PathBuf>,
    pub words: [String; 6],
}

impl ManifestEntry {
    pub fn digit(&self) -> Option<u8> {
        digit_from_word(&self.words[DIGIT_SLOT])
    }
}

/// Tab-separated list of sequences. Paths are stored relative to the
/// manifest's directory and resolved on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("manifest {}: {e}", path.display())))?;
        let root = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, root).map_err(|e| match e {
            Error::Data(m) => Error::Data(format!("manifest {}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::Data(format!(
                    "line {}: expected 5 tab-separated columns, got {}",
                    n + 1,
                    cols.len()
                )));
            }
            let words: Vec<String> = cols[4].split_whitespace().map(str::to_owned).collect();
            let words: [String; 6] = words.try_into().map_err(|w: Vec<String>| {
                Error::Data(format!("line {}: expected 6 label words, got {}", n + 1, w.len()))
            })?;
            let features = match cols[3] {
                "-" | "" => None,
                p => Some(root.join(p)),
            };
            entries.push(ManifestEntry {
                id: cols[0].to_owned(),
                frames_dir: root.join(cols[1]),
                wav: root.join(cols[2]),
                features,
                words,
            });
        }
        let mut ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Data(format!("duplicate sequence id {}", w[0])));
        }
        Ok(Self { entries })
    }

    /// Write with paths relative to `root` where possible.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let root = path.parent().unwrap_or(Path::new("."));
        let rel = |p: &Path| -> String {
            p.strip_prefix(root).unwrap_or(p).to_string_lossy().into_owned()
        };
        let mut out = String::new();
        out.push_str(MANIFEST_HEADER);
        out.push_str("\n# id\tframes\twav\tfeatures\twords\n");
        for e in &self.entries {
            let feats = e.features.as_deref().map(rel).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.id,
                rel(&e.frames_dir),
                rel(&e.wav),
                feats,
                e.words.join(" ")
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}
