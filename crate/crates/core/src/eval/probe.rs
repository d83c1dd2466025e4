//! Distance-based privacy probe: how close synthetic notes sit to the
//! generator's training data in embedding space. Larger minimum cosine
//! distances indicate lower memorization risk.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Corpus;
use crate::privacy::EmbeddingMatrix;
use crate::terms::{cosine_similarity, embed_text};

/// Per-synthetic-row minimum cosine distances plus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDistanceReport {
    pub distances: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

/// For every synthetic row, `1 - max_j cos(row, train_j)`, each in [0, 2].
pub fn min_cosine_distances(
    synth: &EmbeddingMatrix,
    train: &EmbeddingMatrix,
) -> Result<MinDistanceReport, EvalError> {
    if synth.rows() == 0 || train.rows() == 0 || synth.dim() != train.dim() {
        return Err(EvalError::BadEmbeddings);
    }
    for i in 0..synth.rows() {
        if synth.row_norm(i) == 0.0 {
            return Err(EvalError::ZeroRow(i));
        }
    }
    for j in 0..train.rows() {
        if train.row_norm(j) == 0.0 {
            return Err(EvalError::ZeroRow(j));
        }
    }
    let mut distances = Vec::with_capacity(synth.rows());
    for i in 0..synth.rows() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..train.rows() {
            let sim = cosine_similarity(synth.row(i), train.row(j));
            if sim > best {
                best = sim;
            }
        }
        distances.push(1.0 - best);
    }
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let mut sorted = distances.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok(MinDistanceReport {
        distances,
        mean,
        median,
    })
}

/// Hash-embeds every non-empty note of a corpus into a row matrix.
pub fn embed_corpus(corpus: &Corpus, dim: usize) -> Result<EmbeddingMatrix, EvalError> {
    let mut rows = Vec::new();
    for note in &corpus.notes {
        if note.is_degenerate() {
            continue;
        }
        rows.push(embed_text(&note.text, dim)?);
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    EmbeddingMatrix::from_rows(&rows).map_err(|_| EvalError::BadEmbeddings)
}

/// End-to-end probe: embed both corpora and measure the synthetic notes'
/// minimum cosine distances to the training notes.
pub fn privacy_probe(
    synth: &Corpus,
    train: &Corpus,
    dim: usize,
) -> Result<MinDistanceReport, EvalError> {
    let synth_rows = embed_corpus(synth, dim)?;
    let train_rows = embed_corpus(train, dim)?;
    min_cosine_distances(&synth_rows, &train_rows)
}
