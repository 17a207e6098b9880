//! Corpus analytics for health-forum text: ingest exported forum threads,
//! classify disease-relevant conversations, extract and refine discussion
//! topics, and compute the statistics that describe how a disease is talked
//! about (topic prevalence, word saliency, co-occurrence, demographic
//! segmentation).
//!
//! The crate is organized as a pipeline of independent modules:
//!
//! - [`corpus`] — thread/message ingestion, tokenization, vocabulary
//! - [`classify`] — weak-labeled training sets and a hierarchical-softmax
//!   bag-of-words classifier
//! - [`weighting`] — sparse term-document matrices and TF-IDF / log-entropy /
//!   hybrid weighting
//! - [`topics`] — LDA by collapsed Gibbs sampling, prevalence, saliency, and
//!   a 2-D inter-topic map
//! - [`embed`] — CBOW word embeddings with negative sampling and
//!   cosine-similarity queries
//! - [`refine`] — embedding-driven topic pruning/expansion and seed-cluster
//!   sub-topics
//! - [`analytics`] — presence matrices, frequency distributions, NPMI
//!   correlation, and kinship-based age/gender segmentation

pub mod analytics;
pub mod classify;
pub mod corpus;
pub mod embed;
pub mod refine;
pub mod topics;
pub mod weighting;
