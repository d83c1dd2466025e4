//! The combined evaluation report for a real/synthetic corpus pair,
//! serialized as a single JSON document with a fixed schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classify::ClassificationMetrics;
use super::fidelity::{
    frequency_of_frequency, length_fidelity, term_fidelity, term_stats, LengthFidelity,
    TermFidelity, DEFAULT_BIN_WIDTH,
};
use super::histogram::{kl_divergence, Histogram};
use super::probe::MinDistanceReport;
use super::EvalError;
use crate::corpus::Corpus;
use crate::terms::Lexicon;

/// Knobs of the evaluation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub bin_width: usize,
    pub term_threshold: f64,
    pub ngram_sizes: Vec<usize>,
    pub embedding_dim: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            term_threshold: 0.7,
            ngram_sizes: vec![1, 2, 3],
            embedding_dim: 256,
        }
    }
}

/// Real and synthetic n-gram frequency profiles over shared log bins plus
/// their divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramProfilePair {
    pub real: Histogram,
    pub synth: Histogram,
    pub kl: f64,
}

/// Fidelity, utility, and privacy-probe results for one corpus pair.
/// `classification` is populated when the caller supplies label scores;
/// `mauve` only when an external tool's value is injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub length: LengthFidelity,
    pub terms: TermFidelity,
    pub ngram_profiles: BTreeMap<usize, NgramProfilePair>,
    pub classification: Option<ClassificationMetrics>,
    pub mauve: Option<f64>,
    pub privacy_probe: Option<MinDistanceReport>,
}

fn shared_log2_edges(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>) -> Vec<f64> {
    let max_freq = a
        .keys()
        .chain(b.keys())
        .max()
        .copied()
        .unwrap_or(1)
        .max(1);
    let mut edges = vec![1.0];
    let mut upper = 2u64;
    while upper <= max_freq {
        edges.push(upper as f64);
        upper *= 2;
    }
    edges.push(upper as f64);
    edges
}

fn profile_on_edges(fof: &BTreeMap<u64, u64>, edges: &[f64]) -> Histogram {
    let mut counts = vec![0u64; edges.len() - 1];
    for (freq, multiplicity) in fof {
        let mut bin = 0;
        while bin + 1 < counts.len() && *freq as f64 >= edges[bin + 1] {
            bin += 1;
        }
        counts[bin] += multiplicity;
    }
    Histogram {
        edges: edges.to_vec(),
        counts,
        smoothing: 0.5,
    }
}

/// Runs the fidelity suite on a real/synthetic pair. Utility metrics and
/// the privacy probe are attached by the caller when available.
pub fn evaluate_corpora(
    real: &Corpus,
    synth: &Corpus,
    lexicon: &Lexicon,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let length = length_fidelity(real, synth, config.bin_width)?;
    let real_stats = term_stats(real, lexicon, config.term_threshold);
    let synth_stats = term_stats(synth, lexicon, config.term_threshold);
    let terms = term_fidelity(&real_stats, &synth_stats);

    let mut ngram_profiles = BTreeMap::new();
    for &n in &config.ngram_sizes {
        let real_fof = frequency_of_frequency(real, n)?;
        let synth_fof = frequency_of_frequency(synth, n)?;
        let edges = shared_log2_edges(&real_fof, &synth_fof);
        let real_hist = profile_on_edges(&real_fof, &edges);
        let synth_hist = profile_on_edges(&synth_fof, &edges);
        let kl = kl_divergence(&real_hist, &synth_hist)?;
        ngram_profiles.insert(
            n,
            NgramProfilePair {
                real: real_hist,
                synth: synth_hist,
                kl,
            },
        );
    }

    Ok(EvalReport {
        length,
        terms,
        ngram_profiles,
        classification: None,
        mauve: None,
        privacy_probe: None,
    })
}

/// Writes the report as pretty-printed JSON.
pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, json).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}
