use super::{NetworkSpec, Tensor};
use crate::codec::Standardizer;
use crate::vision::CropRegion;

/// Weight and bias of one conv or dense layer. Conv weights are
/// `[out, in, 3, 3]`, dense weights `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LayerParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            weight: Tensor::zeros(self.weight.shape()),
            bias: Tensor::zeros(self.bias.shape()),
        }
    }
}

/// Per-layer gradients, aligned with [`NetworkSpec::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<LayerParams>>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| l.as_ref().map(LayerParams::zeros_like))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if let (Some(a), Some(b)) = (a, b) {
                a.weight.add_scaled(&b.weight, 1.0);
                a.bias.add_scaled(&b.bias, 1.0);
            }
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().all(|t| t.data().iter().all(|&x| x == 0.0))
    }
}

/// Learnable weights plus optimizer state and the metadata needed to turn
/// network outputs back into sound features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: NetworkSpec,
    pub layers: Vec<Option<LayerParams>>,
    /// Adam first-moment estimates, same shapes as `layers`.
    pub first_moment: Vec<Option<LayerParams>>,
    /// Adam second-moment estimates, same shapes as `layers`.
    pub second_moment: Vec<Option<LayerParams>>,
    /// Number of Adam steps taken.
    pub step: u64,
    pub standardizer: Standardizer,
    /// Standardized targets are multiplied by this before training so they
    /// sit inside the tanh output range.
    pub target_scale: f64,
    pub crop: CropRegion,
}

impl ModelParams {
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(Tensor::is_finite)
    }
}
