//! Fidelity metrics, multi-label utility metrics, preference-ranking math,
//! and the distance-based privacy probe.

mod bt;
mod classify;
mod fidelity;
mod histogram;
mod probe;
mod report;

pub use bt::{
    bt_fit, BtResult, PairwiseComparisons, DEFAULT_BT_MAX_ITER, DEFAULT_BT_PSEUDO, DEFAULT_BT_TOL,
};
pub use classify::{classification_metrics, ClassificationMetrics, LabelScores};
pub use fidelity::{
    frequency_of_frequency, length_distribution, length_fidelity, ngram_frequency_profile,
    term_fidelity, term_stats, LengthDistribution, LengthFidelity, TermFidelity, TermStats,
};
pub use histogram::{kl_divergence, Histogram};
pub use probe::{embed_corpus, min_cosine_distances, privacy_probe, MinDistanceReport};
pub use report::{evaluate_corpora, write_report, EvalConfig, EvalReport, NgramProfilePair};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("histograms have different bin edges")]
    MismatchedEdges,
    #[error("histogram has no mass and no smoothing")]
    EmptyHistogram,
    #[error("bin edges must be sorted and at least two")]
    BadEdges,
    #[error("corpus has no notes")]
    EmptyCorpus,
    #[error("bin width must be at least 1")]
    BadBinWidth,
    #[error("n-gram size must lie in [1, 5], got {0}")]
    OrderOutOfRange(usize),
    #[error("truth is {truth_rows}x{truth_cols} but scores are {score_rows}x{score_cols}")]
    ShapeMismatch {
        truth_rows: usize,
        truth_cols: usize,
        score_rows: usize,
        score_cols: usize,
    },
    #[error("label matrix has no samples or no labels")]
    EmptyLabels,
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("precision@k requires 1 <= k <= {labels}, got {k}")]
    BadK { k: usize, labels: usize },
    #[error("no label has both positives and negatives; AUC undefined")]
    NoValidLabels,
    #[error("win matrix must be square with a zero diagonal")]
    BadWinMatrix,
    #[error("comparison graph is disconnected and pseudo-count is zero")]
    DisconnectedGraph,
    #[error("tolerance and pseudo-count must be nonnegative")]
    BadBtParams,
    #[error("embedding matrices are empty or have mismatched dimensions")]
    BadEmbeddings,
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error(transparent)]
    Terms(#[from] crate::terms::TermsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
