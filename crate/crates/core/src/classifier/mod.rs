//! Contact-shape classification: rotation-invariant mask features and a
//! softmax model trained with Adam.

mod features;
mod io;
mod mask;
mod model;

pub use features::{extract_features, signed_log, FeatureExtractor, FeatureVector, ShapeMoments, FEATURE_COUNT, HU_FLOOR};
pub use io::{read_model, write_confusion, write_model};
pub use mask::{Connectivity, Mask};
pub use model::{
    gradient_check, softmax, train, ConfusionMatrix, Prediction, SoftmaxModel, Standardizer, TrainConfig, TrainMeta,
    Weights, CLASS_COUNT, PARAMS,
};

use crate::tactile::ShapeClass;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("no contact found in the image")]
    EmptyContact,
    #[error("training needs at least two classes, all samples are {0}")]
    SingleClass(ShapeClass),
    #[error("empty batch")]
    EmptyBatch,
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("feature vector {0} is not finite")]
    NonFiniteFeature(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Tactile(#[from] crate::tactile::TactileError),
}
