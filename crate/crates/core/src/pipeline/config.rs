//! Pipeline configuration: a TOML file of flat key = value sections, with
//! documented defaults for every knob. CLI flags override file keys; the
//! merged result is what the run report snapshots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::privacy::PrivacyBudget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub budgets: BudgetConfig,
    pub terms: TermsConfig,
    pub generation: GenerationConfig,
    pub quality: QualityConfig,
    pub evaluation: EvaluationConfig,
    pub run: RunConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            budgets: BudgetConfig::default(),
            terms: TermsConfig::default(),
            generation: GenerationConfig::default(),
            quality: QualityConfig::default(),
            evaluation: EvaluationConfig::default(),
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub public: PathBuf,
    pub private_train: PathBuf,
    pub private_test: PathBuf,
    pub lexicon: PathBuf,
    /// Optional section-rules file; the built-in taxonomy applies when
    /// absent.
    pub rules: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Note-generation epsilon; `inf` disables DP for the generator.
    pub epsilon_n: f64,
    /// Note-generation delta; defaults to 1/(N ln N) over the private
    /// training corpus size.
    pub delta_n: Option<f64>,
    /// Term-generation epsilon; term privatization runs only when set.
    pub epsilon_t: Option<f64>,
    /// Term-generation delta; defaults to 1/(N ln N) over the private test
    /// corpus size.
    pub delta_t: Option<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            epsilon_n: 8.0,
            delta_n: None,
            epsilon_t: None,
            delta_t: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TermsConfig {
    /// Trigram-Jaccard acceptance threshold for term extraction.
    pub threshold: f64,
    pub embedding_dim: usize,
    /// Train-time embedding noise scale for generator-contract
    /// implementations with a term-reconstruction training phase; the
    /// bundled nearest-neighbour decoder has none and does not consume it.
    pub sigma_emb: f64,
    /// Fraction of the embedding dimension kept by the perturbation
    /// projection.
    pub rank_fraction: f64,
    /// Budget share of the embedding noise within the perturbation.
    pub allocation: f64,
    /// Terms decoded per section; 0 derives the count from the public
    /// corpus mean.
    pub decode_count: usize,
}

impl Default for TermsConfig {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            embedding_dim: 256,
            sigma_emb: 0.05,
            rank_fraction: 0.6,
            allocation: 0.85,
            decode_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub ngram_order: usize,
    /// L2 clip bound on per-note count contributions.
    pub clip: f64,
    /// Candidate notes per input note.
    pub candidates: usize,
    pub max_tokens: usize,
    pub temperature: f64,
    pub repetition_penalty: f64,
    pub term_bias: f64,
    pub eos_bias: f64,
    pub instruction_template: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            ngram_order: 3,
            clip: 1.0,
            candidates: 4,
            max_tokens: 256,
            temperature: 0.1,
            repetition_penalty: 1.2,
            term_bias: 2.0,
            eos_bias: 0.5,
            instruction_template: "Write the {group} section.".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    /// Order of the public reference scorer.
    pub scorer_order: usize,
    pub add_k: f64,
    /// Maximum accepted sentence length in characters, boundary inclusive.
    pub max_sentence_chars: usize,
    /// Regeneration attempts for rejected candidates before accepting
    /// best-effort.
    pub retry_cap: usize,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            scorer_order: 2,
            add_k: 0.01,
            max_sentence_chars: 2181,
            retry_cap: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub bin_width: usize,
    pub ngram_sizes: Vec<usize>,
    /// Run the minimum-cosine-distance probe against the training corpus.
    pub run_probe: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            bin_width: 250,
            ngram_sizes: vec![1, 2, 3],
            run_probe: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 picks the default. The DPNOTE_THREADS environment
    /// variable caps the pool regardless.
    pub threads: usize,
    /// Keep notes without labels (warning) instead of dropping them.
    pub keep_unlabeled: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            threads: 0,
            keep_unlabeled: true,
        }
    }
}

/// CLI-level overrides applied on top of the file configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub epsilon_n: Option<f64>,
    pub epsilon_t: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse_str(&contents)
    }

    pub fn parse_str(contents: &str) -> Result<Self, PipelineError> {
        let config: PipelineConfig = toml::from_str(contents)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Renders the effective configuration as TOML.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply_overrides(&mut self, overrides: &ConfigOverrides) {
        if let Some(e) = overrides.epsilon_n {
            self.budgets.epsilon_n = e;
        }
        if let Some(e) = overrides.epsilon_t {
            self.budgets.epsilon_t = Some(e);
        }
        if let Some(seed) = overrides.seed {
            self.run.seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            self.paths.output_dir = dir.clone();
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        let b = &self.budgets;
        if b.epsilon_n < 0.0 || b.epsilon_n.is_nan() {
            return bad(format!("epsilon_n must be nonnegative, got {}", b.epsilon_n));
        }
        for (name, delta) in [("delta_n", b.delta_n), ("delta_t", b.delta_t)] {
            if let Some(d) = delta {
                if !(0.0..1.0).contains(&d) {
                    return bad(format!("{name} must lie in [0, 1), got {d}"));
                }
            }
        }
        if let Some(e) = b.epsilon_t {
            if e < 0.0 || e.is_nan() {
                return bad(format!("epsilon_t must be nonnegative, got {e}"));
            }
        }
        let t = &self.terms;
        if !(t.threshold > 0.0 && t.threshold <= 1.0) {
            return bad(format!("terms.threshold must lie in (0, 1], got {}", t.threshold));
        }
        if t.embedding_dim < 8 {
            return bad(format!("terms.embedding_dim must be at least 8, got {}", t.embedding_dim));
        }
        if !(t.rank_fraction > 0.0 && t.rank_fraction <= 1.0) {
            return bad(format!(
                "terms.rank_fraction must lie in (0, 1], got {}",
                t.rank_fraction
            ));
        }
        if !(t.allocation > 0.0 && t.allocation < 1.0) {
            return bad(format!(
                "terms.allocation must lie in (0, 1), got {}",
                t.allocation
            ));
        }
        if t.sigma_emb < 0.0 {
            return bad(format!("terms.sigma_emb must be nonnegative, got {}", t.sigma_emb));
        }
        let g = &self.generation;
        if !(1..=5).contains(&g.ngram_order) {
            return bad(format!(
                "generation.ngram_order must lie in [1, 5], got {}",
                g.ngram_order
            ));
        }
        if !(g.clip > 0.0) {
            return bad(format!("generation.clip must be positive, got {}", g.clip));
        }
        if g.candidates == 0 {
            return bad("generation.candidates must be at least 1".to_string());
        }
        if g.max_tokens == 0 {
            return bad("generation.max_tokens must be at least 1".to_string());
        }
        if g.temperature < 0.0 {
            return bad(format!(
                "generation.temperature must be nonnegative, got {}",
                g.temperature
            ));
        }
        if g.repetition_penalty < 1.0 {
            return bad(format!(
                "generation.repetition_penalty must be at least 1, got {}",
                g.repetition_penalty
            ));
        }
        let q = &self.quality;
        if !(1..=5).contains(&q.scorer_order) {
            return bad(format!(
                "quality.scorer_order must lie in [1, 5], got {}",
                q.scorer_order
            ));
        }
        if !(q.add_k > 0.0) {
            return bad(format!("quality.add_k must be positive, got {}", q.add_k));
        }
        if q.max_sentence_chars == 0 {
            return bad("quality.max_sentence_chars must be at least 1".to_string());
        }
        let e = &self.evaluation;
        if e.bin_width == 0 {
            return bad("evaluation.bin_width must be at least 1".to_string());
        }
        for &n in &e.ngram_sizes {
            if !(1..=5).contains(&n) {
                return bad(format!("evaluation.ngram_sizes entries must lie in [1, 5], got {n}"));
            }
        }
        Ok(())
    }

    /// Note-generation budget, with delta defaulted from the private
    /// training corpus size.
    pub fn note_budget(&self, train_size: usize) -> Result<PrivacyBudget, PipelineError> {
        let delta = match self.budgets.delta_n {
            Some(d) => d,
            None => default_delta(train_size)?,
        };
        PrivacyBudget::new(self.budgets.epsilon_n, delta)
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Term-generation budget when term privatization is enabled.
    pub fn term_budget(&self, test_size: usize) -> Result<Option<PrivacyBudget>, PipelineError> {
        let Some(epsilon) = self.budgets.epsilon_t else {
            return Ok(None);
        };
        let delta = match self.budgets.delta_t {
            Some(d) => d,
            None => default_delta(test_size)?,
        };
        PrivacyBudget::new(epsilon, delta)
            .map(Some)
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// The default failure probability 1/(N ln N) for a private corpus of N
/// records. Rejected below N = 3, where the value leaves the valid delta
/// range.
pub fn default_delta(n: usize) -> Result<f64, PipelineError> {
    if n < 3 {
        return Err(PipelineError::Config(format!(
            "corpus of {n} notes is too small for the default delta rule (need N >= 3)"
        )));
    }
    Ok(1.0 / (n as f64 * (n as f64).ln()))
}
