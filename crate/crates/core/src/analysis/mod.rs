//! Descriptive statistics and PCA over base feature vectors.

mod pca;
mod report;
mod stats;

pub use pca::{
    compare_eigenvectors, eigen_symmetric, pca, pca_with, CovarianceDivisor, EigenComparison,
    EigenDecomposition, RankComparison,
};
pub use report::{report_table, StatsRow, StatsTable};
pub use stats::{StatsSummary, StatsTag};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least 2 vectors, got {0}")]
    InsufficientData(usize),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
}
