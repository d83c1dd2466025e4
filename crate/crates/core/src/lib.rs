//! Privacy-preserving synthesis of long-form clinical text.
//!
//! The library turns a private note corpus into a synthetic one by
//! separating form from content: each note is split into standardized
//! section groups, salient terms are extracted per section, the terms are
//! (optionally) privatised through an embedding-perturbation mechanism,
//! and a DP-trained generator writes each section conditioned on the
//! terms and the previously generated sections. A quality maximiser picks
//! the best of `k` candidates per note, which is free under
//! post-processing. A ledger tracks every privacy cost and composes the
//! overall (ε, δ) guarantee.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`corpus`]: note/corpus data model and JSON-Lines ingestion.
//! - [`structuring`]: rule-based section splitting into six groups.
//! - [`terms`]: lexicon matching, hash embeddings, term decoding.
//! - [`privacy`]: budgets, Gaussian calibration, embedding perturbation,
//!   and the composition accountant.
//! - [`generation`]: the section-generation contract and a DP n-gram
//!   reference generator.
//! - [`quality`]: perplexity scoring and candidate selection.
//! - [`eval`]: fidelity, utility, and privacy-probe metrics.
//! - [`pipeline`]: end-to-end orchestration from a config file.

pub mod corpus;
pub mod eval;
pub mod generation;
pub mod pipeline;
pub mod privacy;
pub mod quality;
pub mod rng;
pub mod structuring;
pub mod terms;
