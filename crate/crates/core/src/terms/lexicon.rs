//! Term lexicon with a character-trigram inverted index.
//!
//! The file format is one term per line, an optional TAB plus canonical-id
//! column, and `#` comment lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::TermsError;

/// A lexicon surface plus its optional canonical identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub canonical_id: Option<String>,
}

/// Lowercases, collapses whitespace, and strips punctuation from token
/// edges. `"  Chest pain,  "` becomes `"chest pain"`.
pub fn normalize_surface(s: &str) -> String {
    let mut tokens = Vec::new();
    for raw in s.split_whitespace() {
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if !core.is_empty() {
            tokens.push(core.to_lowercase());
        }
    }
    tokens.join(" ")
}

/// Character trigrams of a normalized string, as a multiset collapsed to a
/// set. Strings shorter than three characters contribute themselves as a
/// single gram so that short surfaces still index and compare.
pub fn trigram_set(s: &str) -> BTreeSet<String> {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return BTreeSet::new();
    }
    if chars.len() < 3 {
        let mut set = BTreeSet::new();
        set.insert(s.to_string());
        return set;
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

/// Jaccard similarity of the two strings' trigram sets.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    let sa = trigram_set(a);
    let sb = trigram_set(b);
    if sa.is_empty() && sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

/// An immutable term dictionary indexed for approximate matching.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    normalized: Vec<String>,
    /// gram -> indices of entries containing it, ascending.
    index: BTreeMap<String, Vec<usize>>,
    max_tokens: usize,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self, TermsError> {
        let mut normalized = Vec::with_capacity(entries.len());
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut max_tokens = 0;
        for (i, entry) in entries.iter().enumerate() {
            let norm = normalize_surface(&entry.surface);
            if norm.is_empty() {
                return Err(TermsError::EmptySurface { line: i + 1 });
            }
            max_tokens = max_tokens.max(norm.split(' ').count());
            for gram in trigram_set(&norm) {
                index.entry(gram).or_default().push(i);
            }
            normalized.push(norm);
        }
        Ok(Self {
            entries,
            normalized,
            index,
            max_tokens,
        })
    }

    pub fn from_surfaces<S: Into<String>>(surfaces: impl IntoIterator<Item = S>) -> Result<Self, TermsError> {
        Self::new(
            surfaces
                .into_iter()
                .map(|s| LexiconEntry {
                    surface: s.into(),
                    canonical_id: None,
                })
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TermsError> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|source| TermsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&contents)
    }

    pub fn parse_str(contents: &str) -> Result<Self, TermsError> {
        let mut entries = Vec::new();
        for (idx, raw) in contents.lines().enumerate() {
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (surface, id) = match raw.split_once('\t') {
                Some((s, id)) => (s.trim(), Some(id.trim().to_string()).filter(|v| !v.is_empty())),
                None => (trimmed, None),
            };
            if normalize_surface(surface).is_empty() {
                return Err(TermsError::EmptySurface { line: idx + 1 });
            }
            entries.push(LexiconEntry {
                surface: surface.to_string(),
                canonical_id: id,
            });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn surface(&self, i: usize) -> &str {
        &self.entries[i].surface
    }

    pub fn normalized(&self, i: usize) -> &str {
        &self.normalized[i]
    }

    /// Longest surface length in tokens; bounds the matching window.
    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    /// Entry indices sharing at least one gram with the query, ascending.
    /// Complete for any positive similarity threshold: Jaccard > 0 needs a
    /// shared gram.
    pub fn candidates(&self, query_norm: &str) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        for gram in trigram_set(query_norm) {
            if let Some(postings) = self.index.get(&gram) {
                seen.extend(postings.iter().copied());
            }
        }
        seen.into_iter().collect()
    }
}
