//! Section-wise note generation under differential privacy.
//!
//! The reference generator is an n-gram model over DP noisy counts: each
//! note's n-gram count contributions are L2-clipped, Gaussian noise
//! calibrated to the clip bound is added to every count cell over the
//! public context/vocabulary universe, and negatives are floored. Lower
//! order tables for backoff are marginals of the released table, which is
//! free under post-processing. The generation contract (instruction,
//! previous sections, term list, group) is what a neural implementation
//! would plug into; the n-gram model conditions on the previous section
//! through its seeded context and on terms through an additive logit bias.

mod model;
mod sampler;
mod tokenizer;

pub use model::{build_universe, train_dp_ngram, DpNgramModel, NgramUniverse};
pub use sampler::{generate_candidates, generate_section, DecodingParams, GenerationContext};
pub use tokenizer::{tokenize, Vocabulary, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};

use crate::corpus::SectionedNote;
use crate::privacy::PrivacyError;
use crate::structuring::SectionGroup;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must lie in [1, 5], got {0}")]
    OrderOutOfRange(usize),
    #[error("clip bound must be positive, got {0}")]
    BadClip(f64),
    #[error("max_tokens must be at least 1")]
    MaxTokensZero,
    #[error("previous sections must strictly precede {0} in taxonomy order")]
    ContextOrder(SectionGroup),
    #[error("term lists must be in strictly increasing taxonomy order")]
    TermListOrder,
    #[error("candidate count k must be at least 1")]
    ZeroCandidates,
    #[error("model file {path}: {reason}")]
    BadModelFile { path: String, reason: String },
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A note reduced to its per-group section texts: the generator's view of
/// both training data and term-list alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteSections {
    pub note_id: String,
    pub sections: Vec<(SectionGroup, String)>,
}

impl NoteSections {
    pub fn from_sectioned(sectioned: &SectionedNote) -> Self {
        Self {
            note_id: sectioned.note_id.clone(),
            sections: sectioned
                .sections
                .iter()
                .map(|s| (s.group, s.body.clone()))
                .collect(),
        }
    }
}
