//! From-scratch convolutional regression network.
//!
//! Everything is 64-bit floating point in NCHW layout. The network is a
//! plain sequence of layers described by [`NetworkSpec`]; forward passes
//! cache what backpropagation needs, and [`train`] runs mini-batch Adam with
//! early stopping on a validation set.

mod adam;
mod decode;
mod init;
mod layers;
mod loss;
mod model_io;
mod network;
mod params;
mod spec;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig};
pub use decode::{feature_to_target, output_to_feature, predict_features};
pub use init::{he_init, DEFAULT_TARGET_SCALE};
pub use loss::mse_loss;
pub use model_io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use network::{backward, forward, predict, ForwardCache, Mode};
pub use params::{Gradients, LayerParams, ModelParams};
pub use spec::{LayerSpec, NetworkSpec, FULL_CONV_WIDTHS, FULL_DENSE_WIDTH};
pub use tensor::Tensor;
pub use train::{
    evaluate_mse, predict_source, train, train_with_progress, EpochRecord, SampleSource, TrainConfig,
    TrainOutcome, VecSource,
};
