//! Montage analysis toolkit for clinical EEG.
//!
//! The crate covers the full path from raw EDF recordings to detection
//! scores: parsing and synthetic generation ([`ingest`]), re-referencing and
//! bipolar montages ([`montage`]), 26-dimensional cepstral features
//! ([`features`]), cepstral mean normalization ([`normalize`]), descriptive
//! statistics and PCA ([`analysis`]), left-to-right GMM-HMMs ([`hmm`]) and
//! DET/detection-rate scoring ([`eval`]). The [`experiment`] module wires
//! these together into the train/eval montage-mismatch grid.
//!
//! Data-parallel loops (channels, epochs, grid cells) go through [`par`],
//! which uses rayon when the `parallel` feature is enabled and plain
//! iterators otherwise. Results are identical either way.

pub mod analysis;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod hmm;
pub mod ingest;
pub mod montage;
pub mod normalize;
pub mod par;
mod types;

pub use types::{EventClass, MontageTag, ReferenceScheme};

/// Crate-wide error that wraps every module error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Recording(#[from] ingest::RecordingError),
    #[error(transparent)]
    Edf(#[from] ingest::EdfError),
    #[error(transparent)]
    Label(#[from] ingest::LabelError),
    #[error(transparent)]
    Synth(#[from] ingest::SynthError),
    #[error(transparent)]
    Montage(#[from] montage::MontageError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Normalize(#[from] normalize::NormalizeError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Hmm(#[from] hmm::HmmError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
