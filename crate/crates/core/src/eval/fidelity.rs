//! Structural and syntactic fidelity: length distributions, term overlap,
//! and n-gram frequency profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::histogram::{kl_divergence, Histogram};
use super::EvalError;
use crate::corpus::Corpus;
use crate::generation::tokenize;
use crate::terms::{extract_term_matches, Lexicon};

pub const DEFAULT_BIN_WIDTH: usize = 250;
const SMOOTHING: f64 = 0.5;

/// Token-length distribution of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthDistribution {
    pub histogram: Histogram,
    pub mean: f64,
    pub token_counts: Vec<usize>,
}

fn length_edges(max_tokens: usize, bin_width: usize) -> Vec<f64> {
    let bins = max_tokens / bin_width + 1;
    (0..=bins).map(|i| (i * bin_width) as f64).collect()
}

/// Histogram of per-note token counts with fixed-width bins, plus the mean.
pub fn length_distribution(
    corpus: &Corpus,
    bin_width: usize,
) -> Result<LengthDistribution, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if bin_width == 0 {
        return Err(EvalError::BadBinWidth);
    }
    let token_counts: Vec<usize> = corpus
        .notes
        .iter()
        .map(|n| tokenize(&n.text).len())
        .collect();
    let max = *token_counts.iter().max().expect("nonempty corpus");
    let edges = length_edges(max, bin_width);
    let values: Vec<f64> = token_counts.iter().map(|&c| c as f64).collect();
    let histogram = Histogram::from_values(&values, edges, SMOOTHING)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(LengthDistribution {
        histogram,
        mean,
        token_counts,
    })
}

/// Length comparison of a real/synthetic corpus pair over shared bin edges.
/// Direction is KL(real ‖ synthetic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthFidelity {
    pub kl: f64,
    pub mean_real: f64,
    pub mean_synth: f64,
    pub real: Histogram,
    pub synth: Histogram,
}

pub fn length_fidelity(
    real: &Corpus,
    synth: &Corpus,
    bin_width: usize,
) -> Result<LengthFidelity, EvalError> {
    let real_dist = length_distribution(real, bin_width)?;
    let synth_dist = length_distribution(synth, bin_width)?;
    let max = real_dist
        .token_counts
        .iter()
        .chain(synth_dist.token_counts.iter())
        .copied()
        .max()
        .unwrap_or(0);
    let edges = length_edges(max, bin_width);
    let to_values = |counts: &[usize]| counts.iter().map(|&c| c as f64).collect::<Vec<_>>();
    let real_hist =
        Histogram::from_values(&to_values(&real_dist.token_counts), edges.clone(), SMOOTHING)?;
    let synth_hist =
        Histogram::from_values(&to_values(&synth_dist.token_counts), edges, SMOOTHING)?;
    Ok(LengthFidelity {
        kl: kl_divergence(&real_hist, &synth_hist)?,
        mean_real: real_dist.mean,
        mean_synth: synth_dist.mean,
        real: real_hist,
        synth: synth_hist,
    })
}

/// Corpus-level term occurrence statistics: the unary multiset of terms and
/// the binary multiset of unordered within-note co-occurring pairs, stored
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TermStats {
    pub unary: BTreeMap<String, u64>,
    pub binary: BTreeMap<(String, String), u64>,
}

/// Extracts per-note distinct terms and accumulates corpus statistics.
pub fn term_stats(corpus: &Corpus, lexicon: &Lexicon, threshold: f64) -> TermStats {
    let mut stats = TermStats::default();
    for note in &corpus.notes {
        let mut seen = std::collections::BTreeSet::new();
        let mut terms: Vec<String> = Vec::new();
        for m in extract_term_matches(&note.text, lexicon, threshold) {
            if seen.insert(m.surface.to_lowercase()) {
                terms.push(m.surface);
            }
        }
        for term in &terms {
            *stats.unary.entry(term.clone()).or_insert(0) += 1;
        }
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let pair = if terms[i] <= terms[j] {
                    (terms[i].clone(), terms[j].clone())
                } else {
                    (terms[j].clone(), terms[i].clone())
                };
                *stats.binary.entry(pair).or_insert(0) += 1;
            }
        }
    }
    stats
}

/// Jaccard and KL comparison of unary and binary term statistics. Jaccard
/// uses distinct-element sets with the convention Jaccard(∅, ∅) = 1;
/// KL(real ‖ synth) uses occurrence frequencies on the union support with
/// add-half smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFidelity {
    pub jaccard_unary: f64,
    pub jaccard_binary: f64,
    pub kl_unary: f64,
    pub kl_binary: f64,
    /// Set when some component compared two empty multisets.
    pub degenerate: bool,
}

fn jaccard<K: Ord>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> (f64, bool) {
    if a.is_empty() && b.is_empty() {
        return (1.0, true);
    }
    let inter = a.keys().filter(|k| b.contains_key(*k)).count();
    let union = a.len() + b.len() - inter;
    (inter as f64 / union as f64, false)
}

fn multiset_kl<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> (f64, bool) {
    let support: Vec<K> = {
        let mut keys: Vec<K> = a.keys().chain(b.keys()).cloned().collect();
        keys.sort();
        keys.dedup();
        keys
    };
    if support.is_empty() {
        return (0.0, true);
    }
    let total_a: u64 = a.values().sum();
    let total_b: u64 = b.values().sum();
    let s = 0.5;
    let denom_a = total_a as f64 + s * support.len() as f64;
    let denom_b = total_b as f64 + s * support.len() as f64;
    let mut kl = 0.0;
    for key in &support {
        let pa = (a.get(key).copied().unwrap_or(0) as f64 + s) / denom_a;
        let pb = (b.get(key).copied().unwrap_or(0) as f64 + s) / denom_b;
        kl += pa * (pa / pb).ln();
    }
    (kl.max(0.0), false)
}

pub fn term_fidelity(real: &TermStats, synth: &TermStats) -> TermFidelity {
    let (jaccard_unary, d1) = jaccard(&real.unary, &synth.unary);
    let (jaccard_binary, d2) = jaccard(&real.binary, &synth.binary);
    let (kl_unary, d3) = multiset_kl(&real.unary, &synth.unary);
    let (kl_binary, d4) = multiset_kl(&real.binary, &synth.binary);
    TermFidelity {
        jaccard_unary,
        jaccard_binary,
        kl_unary,
        kl_binary,
        degenerate: d1 || d2 || d3 || d4,
    }
}

/// Corpus-level n-gram frequencies: how often each distinct n-gram occurs.
/// N-grams run within notes, without boundary markers.
pub fn ngram_counts(corpus: &Corpus, n: usize) -> Result<BTreeMap<Vec<String>, u64>, EvalError> {
    if !(1..=5).contains(&n) {
        return Err(EvalError::OrderOutOfRange(n));
    }
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for note in &corpus.notes {
        let tokens = tokenize(&note.text);
        if tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// Frequency-of-frequency map: occurrence count -> number of distinct
/// n-grams with that count.
pub fn frequency_of_frequency(
    corpus: &Corpus,
    n: usize,
) -> Result<BTreeMap<u64, u64>, EvalError> {
    let counts = ngram_counts(corpus, n)?;
    let mut fof: BTreeMap<u64, u64> = BTreeMap::new();
    for freq in counts.values() {
        *fof.entry(*freq).or_insert(0) += 1;
    }
    Ok(fof)
}

fn log2_edges(max_freq: u64) -> Vec<f64> {
    let mut edges = vec![1.0];
    let mut upper = 2u64;
    while upper <= max_freq {
        edges.push(upper as f64);
        upper *= 2;
    }
    edges.push(upper as f64);
    edges
}

/// Histogram over n-gram frequencies with base-2 logarithmic bins
/// (edges 1, 2, 4, 8, ...). A corpus whose notes are all shorter than `n`
/// tokens yields an empty profile.
pub fn ngram_frequency_profile(corpus: &Corpus, n: usize) -> Result<Histogram, EvalError> {
    let fof = frequency_of_frequency(corpus, n)?;
    let max_freq = fof.keys().max().copied().unwrap_or(1);
    let edges = log2_edges(max_freq);
    let mut counts = vec![0u64; edges.len() - 1];
    for (freq, multiplicity) in fof {
        let mut bin = 0;
        while bin + 1 < counts.len() && freq as f64 >= edges[bin + 1] {
            bin += 1;
        }
        counts[bin] += multiplicity;
    }
    Ok(Histogram {
        edges,
        counts,
        smoothing: SMOOTHING,
    })
}
