//! Privacy budgets, Gaussian-noise calibration, embedding perturbation,
//! and the composition accountant.

mod accountant;
mod budget;
mod dprp;
mod matrix;

pub use accountant::{compose, AccountantLedger, DataPartition, EntryKind, LedgerEntry};
pub use budget::{gaussian_sigma, per_section_budget, split_budget, NoiseScale, PrivacyBudget};
pub use dprp::{dprp_perturb, DprpParams};
pub use matrix::{add_gaussian_noise, clip_rows, EmbeddingMatrix};

#[derive(Debug, thiserror::Error)]
pub enum PrivacyError {
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(f64),
    #[error("delta must lie in [0, 1), got {0}")]
    DeltaOutOfRange(f64),
    #[error("Gaussian mechanism undefined for delta = 0 with finite epsilon")]
    ZeroDelta,
    #[error("Gaussian mechanism undefined for epsilon = 0 with finite budget")]
    ZeroEpsilon,
    #[error("sensitivity must be positive, got {0}")]
    NonPositiveSensitivity(f64),
    #[error("allocation fraction must lie in (0, 1), got {0}")]
    AllocationOutOfRange(f64),
    #[error("section count must be at least 1")]
    ZeroSections,
    #[error("rank fraction must lie in (0, 1], got {0}")]
    RankFractionOutOfRange(f64),
    #[error("matrix has no columns")]
    EmptyMatrix,
    #[error("row {row} has norm {norm} above the unit clipping bound")]
    UnclippedRow { row: usize, norm: f64 },
    #[error("matrix is {rows}x{dim} but {values} values were supplied")]
    ShapeMismatch { rows: usize, dim: usize, values: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("embedding file {path}: {reason}")]
    BadEmbeddingFile { path: String, reason: String },
    #[error(
        "cost-bearing entries {first:?} and {second:?} share partition {partition}; \
         sequential composition is not supported"
    )]
    OverlappingPartitions {
        first: String,
        second: String,
        partition: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
