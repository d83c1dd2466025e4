//! Sliding-window approximate matching and nearest-neighbour decoding.

use super::embedding::{cosine_similarity, LexiconEmbeddings};
use super::lexicon::{trigram_jaccard, Lexicon};
use super::{TermList, TermsError};
use crate::structuring::SectionGroup;

/// One accepted match: the winning lexicon surface, the byte span of the
/// matched window in the source text, and the achieved similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct TermMatch {
    pub entry_index: usize,
    pub surface: String,
    pub span: (usize, usize),
    pub similarity: f64,
}

/// A body token: normalized core text plus its byte span.
struct BodyToken {
    core: String,
    start: usize,
    end: usize,
}

fn body_tokens(body: &str) -> Vec<BodyToken> {
    let mut tokens = Vec::new();
    for raw in body.split_whitespace() {
        // split_whitespace yields subslices of body, so pointer offsets
        // recover exact byte positions.
        let raw_start = raw.as_ptr() as usize - body.as_ptr() as usize;
        let trimmed_front = raw.trim_start_matches(|c: char| !c.is_alphanumeric());
        let lead = raw.len() - trimmed_front.len();
        let core = trimmed_front.trim_end_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() {
            continue;
        }
        tokens.push(BodyToken {
            core: core.to_lowercase(),
            start: raw_start + lead,
            end: raw_start + lead + core.len(),
        });
    }
    tokens
}

/// Best lexicon entry for a window: highest trigram Jaccard at or above the
/// threshold; ties go to the lowest entry index.
fn best_entry(window: &str, lexicon: &Lexicon, threshold: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for idx in lexicon.candidates(window) {
        let sim = trigram_jaccard(window, lexicon.normalized(idx));
        if sim >= threshold && best.map_or(true, |(_, b)| sim > b) {
            best = Some((idx, sim));
        }
    }
    best
}

/// Scans the body with token windows of length `max_tokens..=1`, longest
/// first, left to right, consuming matched tokens so matches never overlap.
pub fn extract_term_matches(
    body: &str,
    lexicon: &Lexicon,
    threshold: f64,
) -> Vec<TermMatch> {
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "threshold must lie in (0, 1]"
    );
    let tokens = body_tokens(body);
    let mut matches = Vec::new();
    if lexicon.is_empty() {
        return matches;
    }
    let mut i = 0;
    while i < tokens.len() {
        let max_len = lexicon.max_tokens().min(tokens.len() - i);
        let mut advanced = false;
        for len in (1..=max_len).rev() {
            let window: Vec<&str> = tokens[i..i + len].iter().map(|t| t.core.as_str()).collect();
            let window = window.join(" ");
            if let Some((idx, sim)) = best_entry(&window, lexicon, threshold) {
                matches.push(TermMatch {
                    entry_index: idx,
                    surface: lexicon.surface(idx).to_string(),
                    span: (tokens[i].start, tokens[i + len - 1].end),
                    similarity: sim,
                });
                i += len;
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }
    matches
}

/// Extracts the section's term list: matched lexicon surfaces in first
/// occurrence order, deduplicated case-insensitively. An empty body or an
/// empty lexicon yields an empty list.
pub fn extract_terms(
    body: &str,
    lexicon: &Lexicon,
    threshold: f64,
    group: SectionGroup,
) -> TermList {
    TermList::new(
        extract_term_matches(body, lexicon, threshold)
            .into_iter()
            .map(|m| m.surface),
        group,
    )
}

/// Returns the `j` lexicon surfaces whose embeddings are most cosine-similar
/// to `perturbed`, ties broken by lexicon order. A zero query vector decodes
/// to the empty list.
pub fn decode_terms(
    perturbed: &[f64],
    lexicon_embeddings: &LexiconEmbeddings,
    j: usize,
    group: SectionGroup,
) -> Result<TermList, TermsError> {
    if j == 0 {
        return Err(TermsError::ZeroDecodeCount);
    }
    if j > lexicon_embeddings.len() {
        return Err(TermsError::DecodeCountTooLarge {
            j,
            size: lexicon_embeddings.len(),
        });
    }
    if perturbed.iter().all(|v| *v == 0.0) {
        return Ok(TermList::empty(group));
    }
    let mut scored: Vec<(usize, f64)> = (0..lexicon_embeddings.len())
        .map(|i| (i, cosine_similarity(perturbed, lexicon_embeddings.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(TermList::new(
        scored
            .into_iter()
            .take(j)
            .map(|(i, _)| lexicon_embeddings.surface(i).to_string()),
        group,
    ))
}
