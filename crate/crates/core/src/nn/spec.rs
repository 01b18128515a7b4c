use std::fmt;

use crate::codec::FEATURE_DIM;
use crate::vision::CLIP_SIZE;
use crate::{Error, Result};

/// Kernel counts of the five conv-conv-maxpool blocks.
pub const FULL_CONV_WIDTHS: [usize; 5] = [32, 32, 64, 128, 128];
/// Width of the two fully connected hidden layers.
pub const FULL_DENSE_WIDTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// 3×3 convolution, stride 1, zero same-padding.
    Conv3x3 { out_channels: usize },
    /// 2×2 max pooling, stride 2.
    MaxPool2,
    Dense { out_dim: usize },
    LeakyRelu { slope: f64 },
    Tanh,
    /// Inverted dropout, active only in training mode.
    Dropout { rate: f64 },
    Flatten,
}

impl LayerSpec {
    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv3x3 { .. } | LayerSpec::Dense { .. })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv3x3 { out_channels } => write!(f, "conv3:{out_channels}"),
            LayerSpec::MaxPool2 => write!(f, "pool2"),
            LayerSpec::Dense { out_dim } => write!(f, "dense:{out_dim}"),
            LayerSpec::LeakyRelu { slope } => write!(f, "lrelu:{slope:?}"),
            LayerSpec::Tanh => write!(f, "tanh"),
            LayerSpec::Dropout { rate } => write!(f, "drop:{rate:?}"),
            LayerSpec::Flatten => write!(f, "flatten"),
        }
    }
}

/// Input shape (channels, height, width) plus the ordered layer list.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// VGG-style stack: for each width a conv-conv-maxpool block followed by
    /// conv dropout, then hidden dense layers and an output layer. Leaky ReLU
    /// is used everywhere except the last two weighted layers, which use
    /// tanh.
    #[allow(clippy::too_many_arguments)]
    pub fn vgg(
        k: usize,
        side: usize,
        conv_widths: &[usize],
        dense_width: usize,
        out_dim: usize,
        slope: f64,
        conv_dropout: f64,
        dense_dropout: f64,
    ) -> Self {
        let mut layers = Vec::new();
        for &w in conv_widths {
            for _ in 0..2 {
                layers.push(LayerSpec::Conv3x3 { out_channels: w });
                layers.push(LayerSpec::LeakyRelu { slope });
            }
            layers.push(LayerSpec::MaxPool2);
            if conv_dropout > 0.0 {
                layers.push(LayerSpec::Dropout { rate: conv_dropout });
            }
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::Dense { out_dim: dense_width });
        layers.push(LayerSpec::LeakyRelu { slope });
        if dense_dropout > 0.0 {
            layers.push(LayerSpec::Dropout { rate: dense_dropout });
        }
        layers.push(LayerSpec::Dense { out_dim: dense_width });
        layers.push(LayerSpec::Tanh);
        if dense_dropout > 0.0 {
            layers.push(LayerSpec::Dropout { rate: dense_dropout });
        }
        layers.push(LayerSpec::Dense { out_dim });
        layers.push(LayerSpec::Tanh);
        Self {
            input: [k, side, side],
            layers,
        }
    }

    /// The full-size architecture for a K-frame clip.
    pub fn full(k: usize) -> Self {
        Self::vgg(
            k,
            CLIP_SIZE,
            &FULL_CONV_WIDTHS,
            FULL_DENSE_WIDTH,
            FEATURE_DIM,
            0.01,
            0.25,
            0.5,
        )
    }

    /// Number of input channels, i.e. the clip length K.
    pub fn context(&self) -> usize {
        self.input[0]
    }

    /// Per-sample output shape after every layer (not including the input).
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut cur = self.input.to_vec();
        if cur.contains(&0) {
            return Err(Error::Shape(format!("empty input shape {cur:?}")));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |what: &str| Error::Shape(format!("layer {i} ({layer}): {what}, input {cur:?}"));
            cur = match *layer {
                LayerSpec::Conv3x3 { out_channels } => {
                    if cur.len() != 3 || out_channels == 0 {
                        return Err(bad("needs a C×H×W input"));
                    }
                    vec![out_channels, cur[1], cur[2]]
                }
                LayerSpec::MaxPool2 => {
                    if cur.len() != 3 || cur[1] % 2 != 0 || cur[2] % 2 != 0 {
                        return Err(bad("needs even spatial dimensions"));
                    }
                    vec![cur[0], cur[1] / 2, cur[2] / 2]
                }
                LayerSpec::Flatten => vec![cur.iter().product()],
                LayerSpec::Dense { out_dim } => {
                    if cur.len() != 1 || out_dim == 0 {
                        return Err(bad("needs a flat input"));
                    }
                    vec![out_dim]
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad("dropout rate must be in [0, 1)"));
                    }
                    cur
                }
                LayerSpec::LeakyRelu { slope } => {
                    if !slope.is_finite() {
                        return Err(bad("non-finite slope"));
                    }
                    cur
                }
                LayerSpec::Tanh => cur,
            };
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn output_dim(&self) -> Result<usize> {
        let shapes = self.shapes()?;
        Ok(shapes
            .last()
            .map(|s| s.iter().product())
            .unwrap_or_else(|| self.input.iter().product()))
    }

    /// Text form stored in model files, e.g. `in=5x128x128;conv3:32;...`.
    pub fn descriptor(&self) -> String {
        let mut s = format!("in={}x{}x{}", self.input[0], self.input[1], self.input[2]);
        for l in &self.layers {
            s.push(';');
            s.push_str(&l.to_string());
        }
        s
    }

    pub fn parse_descriptor(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::ModelFormat(format!("bad network descriptor: {what}"));
        let mut parts = text.split(';');
        let input = parts
            .next()
            .and_then(|p| p.strip_prefix("in="))
            .ok_or_else(|| bad("missing input shape"))?;
        let dims: Vec<usize> = input
            .split('x')
            .map(|d| d.parse().map_err(|_| bad(input)))
            .collect::<Result<_>>()?;
        let input: [usize; 3] = dims.try_into().map_err(|_| bad("input must have 3 dims"))?;
        let layers = parts
            .map(|p| {
                let (name, arg) = p.split_once(':').unwrap_or((p, ""));
                let int = || arg.parse::<usize>().map_err(|_| bad(p));
                let real = || arg.parse::<f64>().map_err(|_| bad(p));
                Ok(match name {
                    "conv3" => LayerSpec::Conv3x3 { out_channels: int()? },
                    "pool2" => LayerSpec::MaxPool2,
                    "dense" => LayerSpec::Dense { out_dim: int()? },
                    "lrelu" => LayerSpec::LeakyRelu { slope: real()? },
                    "tanh" => LayerSpec::Tanh,
                    "drop" => LayerSpec::Dropout { rate: real()? },
                    "flatten" => LayerSpec::Flatten,
                    _ => return Err(bad(p)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = Self { input, layers };
        spec.shapes()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shape_trace() {
        let spec = NetworkSpec::full(5);
        let shapes = spec.shapes().unwrap();
        let pool_sides: Vec<usize> = spec
            .layers
            .iter()
            .zip(&shapes)
            .filter(|(l, _)| matches!(l, LayerSpec::MaxPool2))
            .map(|(_, s)| s[1])
            .collect();
        assert_eq!(pool_sides, vec![64, 32, 16, 8, 4]);
        let flat = spec
            .layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Flatten))
            .unwrap();
        assert_eq!(shapes[flat], vec![2048]);
        let dense: Vec<usize> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { out_dim } => Some(*out_dim),
                _ => None,
            })
            .collect();
        assert_eq!(dense, vec![512, 512, 18]);
        assert_eq!(spec.output_dim().unwrap(), 18);
    }

    #[test]
    fn activation_split() {
        // tanh follows exactly the last two weighted layers
        let spec = NetworkSpec::full(1);
        let acts: Vec<&LayerSpec> = spec
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Tanh | LayerSpec::LeakyRelu { .. }))
            .collect();
        assert_eq!(acts.len(), 13);
        assert!(acts[..11].iter().all(|l| matches!(l, LayerSpec::LeakyRelu { .. })));
        assert!(acts[11..].iter().all(|l| matches!(l, LayerSpec::Tanh)));
        let drops: Vec<f64> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dropout { rate } => Some(*rate),
                _ => None,
            })
            .collect();
        assert_eq!(drops, vec![0.25, 0.25, 0.25, 0.25, 0.25, 0.5, 0.5]);
    }

    #[test]
    fn descriptor_round_trip() {
        let spec = NetworkSpec::full(7);
        let text = spec.descriptor();
        assert!(text.starts_with("in=7x128x128;conv3:32;lrelu:0.01;"));
        assert_eq!(NetworkSpec::parse_descriptor(&text).unwrap(), spec);
        assert!(NetworkSpec::parse_descriptor("in=1x8x8;warp:3").is_err());
    }

    #[test]
    fn odd_pooling_rejected() {
        let spec = NetworkSpec {
            input: [1, 6, 6],
            layers: vec![LayerSpec::MaxPool2, LayerSpec::MaxPool2],
        };
        assert!(spec.shapes().is_err());
    }
}
