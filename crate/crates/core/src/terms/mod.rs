//! Lexicon-based term extraction, deterministic term embeddings, and the
//! nearest-neighbour term decoder.
//!
//! Extraction slides token windows over section text and accepts a window
//! when its character-trigram Jaccard similarity against some lexicon
//! surface reaches the threshold, longest match first, no overlaps.
//! Embeddings are salted-hash bags of character trigrams: order-invariant,
//! dependency-free, and stable across runs and platforms. Decoding returns
//! the lexicon surfaces closest to a (perturbed) embedding by cosine.

mod embedding;
mod lexicon;
mod matching;

pub use embedding::{
    cosine_similarity, embed_terms, embed_text, perturb_training_embedding,
    term_list_similarity, LexiconEmbeddings, DEFAULT_EMBEDDING_DIM,
};
pub use lexicon::{normalize_surface, trigram_jaccard, trigram_set, Lexicon, LexiconEntry};
pub use matching::{decode_terms, extract_term_matches, extract_terms, TermMatch};

use serde::{Deserialize, Serialize};

use crate::structuring::SectionGroup;

#[derive(Debug, thiserror::Error)]
pub enum TermsError {
    #[error("lexicon line {line}: surface is empty after normalization")]
    EmptySurface { line: usize },
    #[error("embedding dimension must be at least 8, got {0}")]
    DimTooSmall(usize),
    #[error("noise scale must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("decode count j must be at least 1")]
    ZeroDecodeCount,
    #[error("decode count j = {j} exceeds lexicon size {size}")]
    DecodeCountTooLarge { j: usize, size: usize },
    #[error("surface {surface:?} hashes to the zero vector; cannot unit-normalize")]
    ZeroSurfaceEmbedding { surface: String },
    #[error("embedding matrix has {rows} rows but {surfaces} surfaces were supplied")]
    SurfaceCountMismatch { rows: usize, surfaces: usize },
    #[error("embedding row {row} is not unit-normalized (norm {norm})")]
    NotUnitNormalized { row: usize, norm: f64 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An ordered, case-insensitively deduplicated list of terms attached to a
/// section group. Order is first occurrence in the section text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermList {
    pub terms: Vec<String>,
    pub section_group: SectionGroup,
}

impl TermList {
    /// Builds a list from surfaces in occurrence order, dropping
    /// case-insensitive duplicates.
    pub fn new(surfaces: impl IntoIterator<Item = String>, group: SectionGroup) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        let mut terms = Vec::new();
        for s in surfaces {
            if seen.insert(s.to_lowercase()) {
                terms.push(s);
            }
        }
        Self {
            terms,
            section_group: group,
        }
    }

    pub fn empty(group: SectionGroup) -> Self {
        Self {
            terms: Vec::new(),
            section_group: group,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}
