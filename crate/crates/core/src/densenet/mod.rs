//! Fully-connected network with manual backpropagation and RMSprop, plus the
//! rotated-digits data pipeline.
//!
//! One shared ReLU trunk feeds two linear heads: the main head classifies the
//! original images, the auxiliary head classifies rotated copies of the same
//! images. Gating applies to the trunk gradients only; each head always
//! trains on its own loss.

mod data;
mod idx;
mod net;
mod rmsprop;
mod rotate;
mod train;

pub use data::Dataset;
pub use idx::load_idx;
pub use net::{DenseNet, ForwardCache, Head, LayerGrads, TensorPair};
pub use rmsprop::{RmsProp, RmsPropConfig};
pub use rotate::rotate;
pub use train::{
    test_error, train, EpochMetrics, MnistTrainConfig, TrainMode, TrainedRun, VALID_ROTATIONS,
};
