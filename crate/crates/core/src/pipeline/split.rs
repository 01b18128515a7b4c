use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::vision::Manifest;
use crate::{Error, Result};

pub const PLAN_HEADER: &str = "# vidspeech split plan v1";

/// Held-out digit pairs for the five out-of-vocabulary splits; together they
/// cover every digit exactly once. The first is the 9/0 split.
pub const OOV_PAIRS: [[u8; 2]; 5] = [[9, 0], [1, 2], [3, 4], [5, 6], [7, 8]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Random8020,
    OovDigits,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Random8020 => "random_80_20",
            SplitMode::OovDigits => "oov_digits",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random_80_20" => Ok(SplitMode::Random8020),
            "oov" | "oov_digits" => Ok(SplitMode::OovDigits),
            other => Err(Error::InvalidArgument(format!(
                "unknown split mode {other:?} (random_80_20 or oov_digits)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub holdout: Option<[u8; 2]>,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Parse "d1,d2" into two distinct digits.
pub fn parse_holdout(text: &str) -> Result<[u8; 2]> {
    let digits: Vec<u8> = text
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<u8>()
                .ok()
                .filter(|&d| d < 10)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown digit {:?}", d.trim())))
        })
        .collect::<Result<_>>()?;
    match digits[..] {
        [a, b] if a != b => Ok([a, b]),
        [a, b] if a == b => Err(Error::InvalidArgument(format!("held-out digits must differ, got {a},{b}"))),
        _ => Err(Error::InvalidArgument(format!("expected two held-out digits, got {text:?}"))),
    }
}

fn digits_of(manifest: &Manifest) -> Result<Vec<u8>> {
    manifest
        .entries
        .iter()
        .map(|e| {
            e.digit()
                .ok_or_else(|| Error::Data(format!("sequence {} has no digit label", e.id)))
        })
        .collect()
}

impl SplitPlan {
    /// Random mode: a seeded 20% of the sequences, stratified by digit, goes
    /// to test. Every digit keeps at least one training sequence and appears
    /// in test whenever the 20% budget allows. OOV mode: test is exactly
    /// the held-out digits.
    pub fn build(manifest: &Manifest, mode: SplitMode, holdout: Option<[u8; 2]>, seed: u64) -> Result<Self> {
        let digits = digits_of(manifest)?;
        let ids: Vec<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
        let mut test_set = BTreeSet::new();
        let holdout = match mode {
            SplitMode::Random8020 => {
                if holdout.is_some() {
                    return Err(Error::InvalidArgument("holdout digits only apply to oov mode".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut groups: Vec<Vec<usize>> = (0..10u8)
                    .map(|d| (0..ids.len()).filter(|&i| digits[i] == d).collect())
                    .collect();
                for g in &mut groups {
                    g.shuffle(&mut rng);
                }
                // floor share per digit, then hand out the remaining test
                // slots one per digit, uncovered digits first
                let want = (ids.len() as f64 * 0.2).round() as usize;
                let mut quota: Vec<usize> = groups.iter().map(|g| g.len() / 5).collect();
                let mut order: Vec<usize> = (0..10).collect();
                order.shuffle(&mut rng);
                order.sort_by_key(|&d| quota[d] > 0);
                let mut assigned: usize = quota.iter().sum();
                for &d in &order {
                    if assigned >= want {
                        break;
                    }
                    if groups[d].len() >= quota[d] + 2 {
                        quota[d] += 1;
                        assigned += 1;
                    }
                }
                for (g, &q) in groups.iter().zip(&quota) {
                    test_set.extend(g[..q].iter().copied());
                }
                None
            }
            SplitMode::OovDigits => {
                let [a, b] = holdout.ok_or_else(|| Error::InvalidArgument("oov mode needs --holdout d1,d2".into()))?;
                if a == b || a > 9 || b > 9 {
                    return Err(Error::InvalidArgument(format!("invalid holdout digits {a},{b}")));
                }
                test_set.extend((0..ids.len()).filter(|&i| digits[i] == a || digits[i] == b));
                Some([a, b])
            }
        };
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, id) in ids.iter().enumerate() {
            if test_set.contains(&i) {
                test.push(id.to_string());
            } else {
                train.push(id.to_string());
            }
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Data(format!(
                "degenerate split: {} train / {} test sequences",
                train.len(),
                test.len()
            )));
        }
        Ok(Self {
            mode,
            holdout,
            seed,
            train,
            test,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{PLAN_HEADER}\nmode = {}\nseed = {}\n", self.mode, self.seed);
        if let Some([a, b]) = self.holdout {
            s.push_str(&format!("holdout = {a},{b}\n"));
        }
        s.push_str(&format!("train = {}\ntest = {}\n", self.train.join(" "), self.test.join(" ")));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut mode, mut seed, mut holdout, mut train, mut test) = (None, None, None, None, None);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("plan line {line:?}: expected key = value")))?;
            let v = v.trim();
            let ids = || v.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
            match k.trim() {
                "mode" => mode = Some(v.parse::<SplitMode>()?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::Data(format!("bad plan seed {v:?}")))?),
                "holdout" => holdout = Some(parse_holdout(v)?),
                "train" => train = Some(ids()),
                "test" => test = Some(ids()),
                other => return Err(Error::Data(format!("unknown plan key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Data(format!("plan is missing {k}"));
        let plan = Self {
            mode: mode.ok_or_else(|| missing("mode"))?,
            holdout,
            seed: seed.ok_or_else(|| missing("seed"))?,
            train: train.ok_or_else(|| missing("train"))?,
            test: test.ok_or_else(|| missing("test"))?,
        };
        if (plan.mode == SplitMode::OovDigits) != plan.holdout.is_some() {
            return Err(Error::Data("holdout must be given exactly for oov plans".into()));
        }
        let train: BTreeSet<&String> = plan.train.iter().collect();
        if plan.test.iter().any(|t| train.contains(t)) {
            return Err(Error::Data("plan partitions overlap".into()));
        }
        Ok(plan)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("plan {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
