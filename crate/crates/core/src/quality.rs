//! Candidate scoring and selection.
//!
//! The quality maximiser scores each candidate note with a pluggable
//! fluency scorer and keeps the one with the lowest perplexity. Selection
//! operates on already-released generator output, so it is post-processing
//! and never touches the accountant. The default scorer is an n-gram model
//! trained on public data only, which avoids both privacy cost and
//! generator self-bias; add-k smoothing keeps every token probability
//! positive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::generation::{tokenize, Vocabulary, BOS_TOKEN, EOS_TOKEN};

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("text has no tokens; perplexity undefined")]
    EmptyText,
    #[error("no candidate could be scored")]
    AllUnscorable,
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("scorer training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must lie in [1, 5], got {0}")]
    OrderOutOfRange(usize),
}

/// Per-token log-likelihood under some sequence model; the scorer contract
/// behind the quality maximiser.
pub trait SequenceScorer {
    /// Natural-log probabilities of each token given its predecessors.
    /// Empty when the text has no tokens.
    fn token_log_probs(&self, text: &str) -> Vec<f64>;
}

/// Exponentiated average negative log-likelihood of the text's tokens.
pub fn perplexity(scorer: &dyn SequenceScorer, text: &str) -> Result<f64, QualityError> {
    let lps = scorer.token_log_probs(text);
    if lps.is_empty() {
        return Err(QualityError::EmptyText);
    }
    let mean = lps.iter().sum::<f64>() / lps.len() as f64;
    Ok((-mean).exp())
}

/// One scored candidate note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub index: usize,
    pub note: String,
    pub score: f64,
}

/// Argmin with first-index tie-breaking; non-finite scores never win.
/// Returns `None` when every score is non-finite.
pub fn argmin_score(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        if best.map_or(true, |(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Scores every candidate; unscorable candidates get +∞.
pub fn score_candidates(
    candidates: &[String],
    scorer: &dyn SequenceScorer,
) -> Vec<ScoredCandidate> {
    candidates
        .iter()
        .enumerate()
        .map(|(index, note)| ScoredCandidate {
            index,
            note: note.clone(),
            score: perplexity(scorer, note).unwrap_or(f64::INFINITY),
        })
        .collect()
}

/// Returns the lowest-perplexity candidate, ties broken by lowest index.
/// Pure post-processing: no accountant involvement.
pub fn select_best<'a>(
    candidates: &'a [String],
    scorer: &dyn SequenceScorer,
) -> Result<(usize, &'a str), QualityError> {
    if candidates.is_empty() {
        return Err(QualityError::NoCandidates);
    }
    let scored = score_candidates(candidates, scorer);
    let scores: Vec<f64> = scored.iter().map(|c| c.score).collect();
    let index = argmin_score(&scores).ok_or(QualityError::AllUnscorable)?;
    Ok((index, candidates[index].as_str()))
}

/// Accepts a note unless some sentence exceeds `max_chars` characters.
/// Sentences split on `.`/`!`/`?` followed by whitespace or end of text;
/// the boundary is inclusive: a sentence of exactly `max_chars` passes.
pub fn reject_long_sentences(note: &str, max_chars: usize) -> bool {
    assert!(max_chars > 0, "max_chars must be positive");
    let chars: Vec<char> = note.chars().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at_boundary = matches!(c, '.' | '!' | '?')
            && (i + 1 == chars.len() || chars[i + 1].is_whitespace());
        if at_boundary {
            if sentence_len(&chars[start..=i]) > max_chars {
                return false;
            }
            i += 1;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            start = i;
        } else {
            i += 1;
        }
    }
    if start < chars.len() && sentence_len(&chars[start..]) > max_chars {
        return false;
    }
    true
}

fn sentence_len(chars: &[char]) -> usize {
    // Trim surrounding whitespace from the measured span.
    let begin = chars.iter().take_while(|c| c.is_whitespace()).count();
    let end = chars.iter().rev().take_while(|c| c.is_whitespace()).count();
    chars.len().saturating_sub(begin + end)
}

/// Plain n-gram scorer over public text with add-k smoothing.
///
/// Probability of token `t` after context `c` is
/// `(count(c, t) + k) / (total(c) + k * V)` with `V` the number of
/// emittable tokens; unseen contexts degrade to the uniform `1 / V`.
#[derive(Debug, Clone)]
pub struct NgramScorer {
    order: usize,
    vocab: Vocabulary,
    add_k: f64,
    table: BTreeMap<Vec<u32>, ContextCounts>,
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: f64,
    counts: BTreeMap<u32, f64>,
}

pub const DEFAULT_ADD_K: f64 = 0.01;

impl NgramScorer {
    pub fn train<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        order: usize,
        add_k: f64,
    ) -> Result<Self, QualityError> {
        if !(1..=5).contains(&order) {
            return Err(QualityError::OrderOutOfRange(order));
        }
        let texts: Vec<&str> = texts.into_iter().collect();
        if texts.is_empty() {
            return Err(QualityError::EmptyCorpus);
        }
        let mut all_tokens = Vec::new();
        for text in &texts {
            all_tokens.extend(tokenize(text));
        }
        let vocab = Vocabulary::from_tokens(all_tokens.iter().map(|s| s.as_str()));
        let mut table: BTreeMap<Vec<u32>, ContextCounts> = BTreeMap::new();
        let bos = vocab.id(BOS_TOKEN).expect("reserved token");
        let eos = vocab.id(EOS_TOKEN).expect("reserved token");
        for text in &texts {
            let mut stream = vec![bos; order - 1];
            stream.extend(tokenize(text).iter().map(|t| vocab.id_or_unk(t)));
            stream.push(eos);
            for i in 0..stream.len() - (order - 1) {
                let ctx = stream[i..i + order - 1].to_vec();
                let next = stream[i + order - 1];
                let entry = table.entry(ctx).or_default();
                entry.total += 1.0;
                *entry.counts.entry(next).or_insert(0.0) += 1.0;
            }
        }
        Ok(Self {
            order,
            vocab,
            add_k,
            table,
        })
    }

    /// Number of emittable tokens (everything but the begin marker).
    pub fn effective_vocab_size(&self) -> usize {
        self.vocab.len() - 1
    }
}

impl SequenceScorer for NgramScorer {
    fn token_log_probs(&self, text: &str) -> Vec<f64> {
        let ids: Vec<u32> = tokenize(text)
            .iter()
            .map(|t| self.vocab.id_or_unk(t))
            .collect();
        let bos = self.vocab.id(BOS_TOKEN).expect("reserved token");
        let v = self.effective_vocab_size() as f64;
        let mut stream = vec![bos; self.order - 1];
        stream.extend(&ids);
        let mut out = Vec::with_capacity(ids.len());
        for i in 0..ids.len() {
            let ctx = &stream[i..i + self.order - 1];
            let next = stream[i + self.order - 1];
            let (count, total) = match self.table.get(ctx) {
                Some(entry) => (
                    entry.counts.get(&next).copied().unwrap_or(0.0),
                    entry.total,
                ),
                None => (0.0, 0.0),
            };
            out.push(((count + self.add_k) / (total + self.add_k * v)).ln());
        }
        out
    }
}
