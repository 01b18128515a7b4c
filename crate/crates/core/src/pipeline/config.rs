use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::nn::{NetworkSpec, TrainConfig, DEFAULT_TARGET_SCALE, FULL_CONV_WIDTHS, FULL_DENSE_WIDTH};
use crate::codec::FEATURE_DIM;
use crate::vision::CLIP_SIZE;
use crate::{Error, Result};

/// Everything a training run needs besides data: optimizer settings plus
/// the network size and sampling knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// One conv-conv-pool block per entry.
    pub conv_widths: Vec<usize>,
    pub dense_width: usize,
    /// Side of the square network input after crop-and-scale.
    pub clip_side: usize,
    /// Train on every n-th video frame of each sequence.
    pub frame_stride: usize,
    /// Fraction of training sequences held back for early stopping.
    pub val_fraction: f64,
    pub target_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            conv_widths: FULL_CONV_WIDTHS.to_vec(),
            dense_width: FULL_DENSE_WIDTH,
            clip_side: CLIP_SIZE,
            frame_stride: 1,
            val_fraction: 0.1,
            target_scale: DEFAULT_TARGET_SCALE,
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}")))
}

impl RunConfig {
    /// Parse line-oriented `key = value` text. Blank lines and `#` comments
    /// are ignored; unknown keys are errors; missing keys keep defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", n + 1))
            })?;
            let (key, v) = (key.trim(), v.trim());
            let t = &mut c.train;
            match key {
                "learning_rate" => t.learning_rate = value(key, v)?,
                "batch_size" => t.batch_size = value(key, v)?,
                "conv_dropout" => t.conv_dropout = value(key, v)?,
                "dense_dropout" => t.dense_dropout = value(key, v)?,
                "leaky_slope" => t.leaky_slope = value(key, v)?,
                "patience" => t.patience = value(key, v)?,
                "max_epochs" => t.max_epochs = value(key, v)?,
                "seed" => t.seed = value(key, v)?,
                "conv_widths" => {
                    c.conv_widths = v
                        .split(',')
                        .map(|w| value(key, w.trim()))
                        .collect::<Result<_>>()?
                }
                "dense_width" => c.dense_width = value(key, v)?,
                "clip_side" => c.clip_side = value(key, v)?,
                "frame_stride" => c.frame_stride = value(key, v)?,
                "val_fraction" => c.val_fraction = value(key, v)?,
                "target_scale" => c.target_scale = value(key, v)?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "config line {}: unknown key {other:?}",
                        n + 1
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.conv_widths.is_empty() || self.conv_widths.contains(&0) {
            return bad("conv_widths must be a non-empty list of positive widths".into());
        }
        if self.dense_width == 0 || self.frame_stride == 0 {
            return bad("dense_width and frame_stride must be positive".into());
        }
        let div = 1usize << self.conv_widths.len();
        if self.clip_side == 0 || self.clip_side % div != 0 {
            return bad(format!(
                "clip_side {} must be a positive multiple of {div} for {} pooling blocks",
                self.clip_side,
                self.conv_widths.len()
            ));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must lie in [0, 1)".into());
        }
        if !(self.target_scale > 0.0 && self.target_scale.is_finite()) {
            return bad("target_scale must be positive".into());
        }
        Ok(())
    }

    pub fn network(&self, k: usize) -> NetworkSpec {
        let t = &self.train;
        NetworkSpec::vgg(
            k,
            self.clip_side,
            &self.conv_widths,
            self.dense_width,
            FEATURE_DIM,
            t.leaky_slope,
            t.conv_dropout,
            t.dense_dropout,
        )
    }

    /// Text accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let widths: Vec<String> = self.conv_widths.iter().map(|w| w.to_string()).collect();
        let mut s = String::new();
        for (k, v) in [
            ("learning_rate", t.learning_rate.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("conv_dropout", t.conv_dropout.to_string()),
            ("dense_dropout", t.dense_dropout.to_string()),
            ("leaky_slope", t.leaky_slope.to_string()),
            ("patience", t.patience.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("seed", t.seed.to_string()),
            ("conv_widths", widths.join(",")),
            ("dense_width", self.dense_width.to_string()),
            ("clip_side", self.clip_side.to_string()),
            ("frame_stride", self.frame_stride.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("target_scale", self.target_scale.to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_recipe() {
        let c = RunConfig::default();
        assert_eq!(c.train.learning_rate, 0.003);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!((c.train.conv_dropout, c.train.dense_dropout), (0.25, 0.5));
        assert_eq!(c.conv_widths, vec![32, 32, 64, 128, 128]);
        assert_eq!(c.network(5), NetworkSpec::full(5));
    }

    #[test]
    fn parse_overrides_and_round_trips() {
        let text = "# small run\nlearning_rate = 0.01\nconv_widths = 4, 8\nclip_side=32 # inline\n\nmax_epochs = 7\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.train.learning_rate, 0.01);
        assert_eq!(c.conv_widths, vec![4, 8]);
        assert_eq!(c.clip_side, 32);
        assert_eq!(c.train.max_epochs, 7);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "learning_rate",
            "batch_size = -3",
            "conv_dropout = 1.0",
            "clip_side = 100",
            "conv_widths = 4,0",
            "val_fraction = 1",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::InvalidArgument(_))), "{text}");
        }
    }
}
