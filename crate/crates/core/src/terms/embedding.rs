//! Salted-hash bag embeddings for terms and text.
//!
//! Each character trigram of a term hashes to a bucket and a sign with two
//! independently salted 64-bit FNV-1a hashes; a term list embeds as the
//! L2-normalized sum over its terms' gram contributions. The construction
//! is deterministic across runs and platforms and invariant to term order.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::lexicon::normalize_surface;
use super::{TermList, TermsError};
use crate::privacy::EmbeddingMatrix;

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

const MIN_DIM: usize = 8;

// Fixed salts; changing them changes every embedding.
const BUCKET_SALT: u64 = 0x5bd1_e995_9d1c_a3e7;
const SIGN_SALT: u64 = 0x94d0_49bb_1331_11eb;

fn fnv1a64(salt: u64, data: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &byte in data {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Character trigram occurrences (a multiset, unlike the matcher's set);
/// strings shorter than three characters yield themselves.
fn gram_occurrences(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < 3 {
        return vec![s.to_string()];
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

fn accumulate_term(acc: &mut [f64], term: &str) {
    let norm = normalize_surface(term);
    for gram in gram_occurrences(&norm) {
        let bytes = gram.as_bytes();
        let bucket = (fnv1a64(BUCKET_SALT, bytes) % acc.len() as u64) as usize;
        let sign = if fnv1a64(SIGN_SALT, bytes) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        acc[bucket] += sign;
    }
}

fn l2_normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Order-invariant bag embedding of a term list; the empty list maps to the
/// zero vector, the degenerate marker consumers must check for.
pub fn embed_terms(list: &TermList, dim: usize) -> Result<Vec<f64>, TermsError> {
    if dim < MIN_DIM {
        return Err(TermsError::DimTooSmall(dim));
    }
    let mut acc = vec![0.0; dim];
    for term in &list.terms {
        accumulate_term(&mut acc, term);
    }
    Ok(l2_normalize(acc))
}

/// Bag embedding of running text: every whitespace token contributes its
/// grams. Nonzero for any text containing an alphanumeric character.
pub fn embed_text(text: &str, dim: usize) -> Result<Vec<f64>, TermsError> {
    if dim < MIN_DIM {
        return Err(TermsError::DimTooSmall(dim));
    }
    let mut acc = vec![0.0; dim];
    for token in text.split_whitespace() {
        accumulate_term(&mut acc, token);
    }
    Ok(l2_normalize(acc))
}

/// Adds elementwise Gaussian noise with standard deviation `sigma_emb`,
/// the train-time counterpart of inference-time perturbation.
pub fn perturb_training_embedding(
    embedding: &[f64],
    sigma_emb: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, TermsError> {
    if sigma_emb < 0.0 || sigma_emb.is_nan() {
        return Err(TermsError::NegativeSigma(sigma_emb));
    }
    if sigma_emb == 0.0 {
        return Ok(embedding.to_vec());
    }
    let normal = Normal::new(0.0, sigma_emb).expect("sigma validated above");
    Ok(embedding.iter().map(|v| v + normal.sample(rng)).collect())
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Cosine similarity of two term lists' embeddings; 0 if either embedding
/// is the zero vector (e.g. both lists empty).
pub fn term_list_similarity(a: &TermList, b: &TermList, dim: usize) -> Result<f64, TermsError> {
    let ea = embed_terms(a, dim)?;
    let eb = embed_terms(b, dim)?;
    Ok(cosine_similarity(&ea, &eb))
}

/// Unit-normalized embeddings of every lexicon surface, the decoder's
/// search space. May be computed from a lexicon or supplied externally as
/// a `DPEM` file plus a parallel surfaces text file.
#[derive(Debug, Clone)]
pub struct LexiconEmbeddings {
    surfaces: Vec<String>,
    matrix: EmbeddingMatrix,
    index: std::collections::HashMap<String, usize>,
}

impl LexiconEmbeddings {
    pub fn from_lexicon(
        lexicon: &super::lexicon::Lexicon,
        dim: usize,
    ) -> Result<Self, TermsError> {
        let mut rows = Vec::with_capacity(lexicon.len());
        let mut surfaces = Vec::with_capacity(lexicon.len());
        for i in 0..lexicon.len() {
            let surface = lexicon.surface(i).to_string();
            let mut acc = vec![0.0; dim.max(MIN_DIM)];
            if dim < MIN_DIM {
                return Err(TermsError::DimTooSmall(dim));
            }
            accumulate_term(&mut acc, &surface);
            let row = l2_normalize(acc);
            if row.iter().all(|v| *v == 0.0) {
                return Err(TermsError::ZeroSurfaceEmbedding { surface });
            }
            rows.push(row);
            surfaces.push(surface);
        }
        let matrix = EmbeddingMatrix::from_rows(&rows)
            .expect("rows share the embedding dimension");
        Self::from_matrix(surfaces, matrix)
    }

    /// Builds from explicit rows; rows must be unit-normalized.
    pub fn from_rows(surfaces: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, TermsError> {
        let matrix = EmbeddingMatrix::from_rows(rows).map_err(|_| {
            TermsError::SurfaceCountMismatch {
                rows: rows.len(),
                surfaces: surfaces.len(),
            }
        })?;
        Self::from_matrix(surfaces, matrix)
    }

    pub fn from_matrix(
        surfaces: Vec<String>,
        matrix: EmbeddingMatrix,
    ) -> Result<Self, TermsError> {
        if surfaces.len() != matrix.rows() {
            return Err(TermsError::SurfaceCountMismatch {
                rows: matrix.rows(),
                surfaces: surfaces.len(),
            });
        }
        for i in 0..matrix.rows() {
            let norm = matrix.row_norm(i);
            if (norm - 1.0).abs() > 1e-6 {
                return Err(TermsError::NotUnitNormalized { row: i, norm });
            }
        }
        let index = surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (normalize_surface(s), i))
            .collect();
        Ok(Self {
            surfaces,
            matrix,
            index,
        })
    }

    /// Loads external embeddings: a `DPEM` matrix plus one surface per line.
    pub fn load(
        dpem_path: impl AsRef<Path>,
        surfaces_path: impl AsRef<Path>,
    ) -> Result<Self, TermsError> {
        let surfaces_path = surfaces_path.as_ref();
        let matrix = EmbeddingMatrix::read_dpem(&dpem_path).map_err(|e| TermsError::Io {
            path: dpem_path.as_ref().display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
        })?;
        let contents = fs::read_to_string(surfaces_path).map_err(|source| TermsError::Io {
            path: surfaces_path.display().to_string(),
            source,
        })?;
        let surfaces: Vec<String> = contents
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Self::from_matrix(surfaces, matrix)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn surface(&self, i: usize) -> &str {
        &self.surfaces[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    /// Bag embedding of a term list in this embedding space: the
    /// L2-normalized sum of the terms' surface rows. Terms without a row
    /// (never produced by the extractor) contribute nothing; an empty or
    /// fully unknown list maps to the zero vector. This is what lets
    /// externally supplied embeddings replace the hash embedder end to
    /// end.
    pub fn embed_list(&self, list: &TermList) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        for term in &list.terms {
            if let Some(&i) = self.index.get(&normalize_surface(term)) {
                for (a, v) in acc.iter_mut().zip(self.matrix.row(i)) {
                    *a += v;
                }
            }
        }
        l2_normalize(acc)
    }
}
