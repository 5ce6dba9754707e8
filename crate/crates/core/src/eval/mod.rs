//! Detection-rate scoring, DET curves and the train/eval montage grid.

mod det;
mod matrix;
mod score;

pub use det::{det_curve, probit, DetCurve, DetPoint, DEVIATE_CLAMP};
pub use matrix::{
    comparison_csv, evaluate, run_matrix, train_models, CellResult, MatrixResult, TaggedEpochs,
};
pub use score::{score, RateKind, ScoreReport};

use crate::hmm::HmmError;
use crate::{EventClass, MontageTag};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("nothing to score")]
    EmptyInput,
    #[error("DET curve needs both classes, only {0} present")]
    SingleClassInput(EventClass),
    #[error("{kind} '{id}' appears in both train and eval splits")]
    SplitOverlap { kind: &'static str, id: String },
    #[error("training {tag} models: {source}")]
    Train {
        tag: MontageTag,
        #[source]
        source: HmmError,
    },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}
