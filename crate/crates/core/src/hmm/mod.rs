//! Left-to-right GMM-HMMs with diagonal covariances.
//!
//! One model is trained per event class; an epoch is classified by the
//! larger forward log-likelihood, and the SEIZ-minus-BCKG difference is the
//! detection score.

mod decode;
mod epoch;
mod io;
mod model;
mod train;

pub use decode::{classify, log_forward, viterbi, Classification, ModelSet};
pub use epoch::{epochs_from_sequence, Epoch};
pub use io::{model_from_bytes, model_from_json, model_to_bytes, model_to_json};
pub use model::{DiagGmm, HmmModel, TrainingMetadata};
pub use train::{train, train_pair, TrainConfig};

use crate::EventClass;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HmmError {
    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("epoch has no frames")]
    EmptyEpoch,
    #[error("need at least {required} {class} epochs, got {found}")]
    InsufficientData {
        class: EventClass,
        required: usize,
        found: usize,
    },
    #[error("log-likelihood became non-finite at iteration {iteration}; check the variance floor")]
    NonFiniteLikelihood { iteration: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
