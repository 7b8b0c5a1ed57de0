//! A small dense feed-forward network with hand-derived backpropagation,
//! softmax cross-entropy or data-uncertainty loss, and Adam.

mod adam;
mod backprop;
mod format;
mod loss;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use backprop::{backward, batch_backward, batch_loss, output_loss_grad, Gradients, Objective};
pub use format::{SavedModel, MODEL_HEADER};
pub use loss::{cross_entropy, sigmoid, softmax, softmax2};
pub use model::{Dense, InputNorm, ModelParams, DEFAULT_LAYER_SIZES};
pub use train::{feature_matrix, log_csv, train, train_from, EpochLog, LossKind, TrainConfig, TrainOutcome};
