//! Ego-pose regressor: network, loss, augmentation, training and checkpoints.

pub mod augment;
pub mod checkpoint;
pub mod loss;
pub mod network;
pub mod train;
pub mod variant;

pub use augment::{augment, AugmentRanges, Interval};
pub use loss::loss;
pub use network::{Architecture, ConvSpec, ForwardResult, Gradients, ModelParams, OutputScale};
pub use train::{fine_tune, loss_gradient, mean_loss, train, train_with, Sample, TrainConfig};
pub use variant::VariantTag;
