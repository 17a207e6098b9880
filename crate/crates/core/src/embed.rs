//! CBOW word embeddings trained with negative sampling, plus the cosine
//! queries the rest of the pipeline runs against them.
//!
//! The mean of the context vectors predicts the center word against one
//! positive and `negatives` sampled targets (unigram^0.75 distribution).
//! Sequential SGD with a linearly decaying learning rate; a fixed seed gives
//! bit-identical vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, TokenizedDoc};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("no term reaches min_count {min_count}; lower min_count or enlarge the corpus")]
    EmptyVocabulary { min_count: u64 },
    #[error("term {0:?} not in embedding vocabulary")]
    UnknownTerm(String),
    #[error("query vector has dimension {got}, space has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad vector file {path}: {reason}")]
    Format { path: String, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CbowParams {
    pub dim: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CbowParams {
    fn default() -> Self {
        CbowParams {
            dim: 100,
            epochs: 100,
            window: 5,
            negatives: 5,
            min_count: 100,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

/// Training provenance kept with the vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub params: CbowParams,
    /// Mean loss per epoch, in training order.
    pub epoch_mean_loss: Vec<f64>,
}

/// A dense word-vector table with cosine queries.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    /// V x dim, row-major input vectors.
    vectors: Vec<f64>,
    dim: usize,
    pub meta: Option<TrainingMeta>,
}

impl EmbeddingSpace {
    /// Build a space from explicit vectors, for constructed fixtures and for
    /// loading external vector files.
    pub fn from_vectors(terms: Vec<String>, vectors: Vec<f64>, dim: usize) -> Self {
        assert_eq!(terms.len() * dim, vectors.len(), "vector table shape");
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        EmbeddingSpace {
            terms,
            index,
            vectors,
            dim,
            meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn vector(&self, term: &str) -> Option<&[f64]> {
        self.index
            .get(term)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    fn vector_by_id(&self, id: usize) -> &[f64] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Cosine similarity of two vocabulary words.
pub fn similarity(space: &EmbeddingSpace, w1: &str, w2: &str) -> Result<f64, EmbedError> {
    let a = space
        .vector(w1)
        .ok_or_else(|| EmbedError::UnknownTerm(w1.to_owned()))?;
    let b = space
        .vector(w2)
        .ok_or_else(|| EmbedError::UnknownTerm(w2.to_owned()))?;
    Ok(cosine(a, b))
}

pub enum NearestQuery<'a> {
    Term(&'a str),
    Vector(&'a [f64]),
}

#[derive(Debug, Clone, Copy)]
pub enum NearestMode {
    TopK(usize),
    /// All terms with similarity strictly above the threshold.
    Threshold(f64),
}

/// Ranked cosine neighbors of a term or free vector. A term query never
/// returns the term itself.
pub fn nearest(
    space: &EmbeddingSpace,
    query: NearestQuery,
    mode: NearestMode,
) -> Result<Vec<(String, f64)>, EmbedError> {
    let (query_vec, exclude) = match query {
        NearestQuery::Term(t) => {
            let id = *space
                .index
                .get(t)
                .ok_or_else(|| EmbedError::UnknownTerm(t.to_owned()))?;
            (space.vector_by_id(id).to_vec(), Some(id))
        }
        NearestQuery::Vector(v) => {
            if v.len() != space.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: space.dim,
                    got: v.len(),
                });
            }
            (v.to_vec(), None)
        }
    };
    let mut scored: Vec<(usize, f64)> = (0..space.len())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (i, cosine(&query_vec, space.vector_by_id(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let take = match mode {
        NearestMode::TopK(k) => scored.into_iter().take(k).collect::<Vec<_>>(),
        NearestMode::Threshold(tau) => scored.into_iter().filter(|&(_, s)| s > tau).collect(),
    };
    Ok(take
        .into_iter()
        .map(|(i, s)| (space.terms[i].clone(), s))
        .collect())
}

/// The CBOW loss and its exact gradients on one (context, center, negatives)
/// example, as pure functions of the vector tables. `train_cbow` applies the
/// same math incrementally; these entry points exist so the gradients can be
/// checked against finite differences.
pub mod cbow {
    use super::dot;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn hidden(input: &[f64], dim: usize, context: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; dim];
        for &c in context {
            let row = &input[c * dim..(c + 1) * dim];
            for (hi, vi) in h.iter_mut().zip(row) {
                *hi += vi;
            }
        }
        let inv = 1.0 / context.len() as f64;
        for hi in &mut h {
            *hi *= inv;
        }
        h
    }

    /// Negative log-likelihood of the center word against the sampled
    /// negatives, with the hidden state as the context mean.
    pub fn loss(
        input: &[f64],
        output: &[f64],
        dim: usize,
        context: &[usize],
        center: usize,
        negatives: &[usize],
    ) -> f64 {
        let h = hidden(input, dim, context);
        let mut total = -sigmoid(dot(&output[center * dim..(center + 1) * dim], &h)).ln();
        for &n in negatives {
            total -= sigmoid(-dot(&output[n * dim..(n + 1) * dim], &h)).ln();
        }
        total
    }

    /// Gradients of [`loss`]: one shared gradient for every context input
    /// vector (each occurrence contributes this much) and one per target
    /// output row, ordered center first then negatives.
    pub fn gradients(
        input: &[f64],
        output: &[f64],
        dim: usize,
        context: &[usize],
        center: usize,
        negatives: &[usize],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let h = hidden(input, dim, context);
        let mut grad_h = vec![0.0; dim];
        let mut grad_outputs = Vec::with_capacity(1 + negatives.len());
        for (slot, &target) in std::iter::once(&center).chain(negatives).enumerate() {
            let row = &output[target * dim..(target + 1) * dim];
            let label = if slot == 0 { 1.0 } else { 0.0 };
            let g = sigmoid(dot(row, &h)) - label;
            grad_outputs.push(h.iter().map(|&hi| g * hi).collect());
            for (gh, &ri) in grad_h.iter_mut().zip(row) {
                *gh += g * ri;
            }
        }
        let inv = 1.0 / context.len() as f64;
        let grad_context: Vec<f64> = grad_h.iter().map(|&g| g * inv).collect();
        (grad_context, grad_outputs)
    }
}

/// Cumulative unigram^0.75 table with binary-search draws.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(frequencies: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(frequencies.len());
        let mut total = 0.0;
        for &f in frequencies {
            total += (f as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeTable { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty table");
        let x = rng.gen::<f64>() * total;
        match self
            .cumulative
            .binary_search_by(|probe| probe.total_cmp(&x))
        {
            Ok(i) => (i + 1).min(self.cumulative.len() - 1),
            Err(i) => i.min(self.cumulative.len() - 1),
        }
    }
}

/// Train CBOW embeddings over tokenized documents.
pub fn train_cbow(
    docs: &[TokenizedDoc],
    params: &CbowParams,
) -> Result<EmbeddingSpace, EmbedError> {
    let vocab = build_vocabulary(docs, params.min_count);
    if vocab.is_empty() {
        return Err(EmbedError::EmptyVocabulary {
            min_count: params.min_count,
        });
    }
    let dim = params.dim;
    let v = vocab.len();
    let sentences: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.id(t)).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let frequencies: Vec<u64> = (0..v).map(|i| vocab.collection_frequency(i)).collect();
    let table = NegativeTable::new(&frequencies);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..v * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output = vec![0.0; v * dim];

    let centers_per_epoch: usize = sentences.iter().map(|s| s.len()).sum();
    let total_steps = (params.epochs * centers_per_epoch).max(1) as f64;
    let min_lr_factor = 1e-4;
    let mut step = 0usize;
    let mut epoch_mean_loss = Vec::with_capacity(params.epochs);
    let mut context: Vec<usize> = Vec::new();
    let mut negatives: Vec<usize> = Vec::new();
    let mut grad_h = vec![0.0; dim];
    let mut h = vec![0.0; dim];

    for _ in 0..params.epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_updates = 0usize;
        for sentence in &sentences {
            for (i, &center) in sentence.iter().enumerate() {
                let lr_factor = (1.0 - step as f64 / total_steps).max(min_lr_factor);
                let lr = params.learning_rate * lr_factor;
                step += 1;

                context.clear();
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window).min(sentence.len() - 1);
                for (j, &w) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != i {
                        context.push(w);
                    }
                }
                if context.is_empty() {
                    continue;
                }

                negatives.clear();
                if v > 1 {
                    let mut attempts = 0;
                    while negatives.len() < params.negatives && attempts < params.negatives * 20 {
                        attempts += 1;
                        let n = table.draw(&mut rng);
                        if n != center {
                            negatives.push(n);
                        }
                    }
                }

                // hidden = mean of context vectors
                h.iter_mut().for_each(|x| *x = 0.0);
                for &c in &context {
                    let row = &input[c * dim..(c + 1) * dim];
                    for (hi_, vi) in h.iter_mut().zip(row) {
                        *hi_ += vi;
                    }
                }
                let inv = 1.0 / context.len() as f64;
                h.iter_mut().for_each(|x| *x *= inv);

                grad_h.iter_mut().for_each(|x| *x = 0.0);
                let mut example_loss = 0.0;
                for (slot, &target) in std::iter::once(&center).chain(&negatives).enumerate() {
                    let row = &mut output[target * dim..(target + 1) * dim];
                    let s = 1.0 / (1.0 + (-dot(row, &h)).exp());
                    let label = if slot == 0 { 1.0 } else { 0.0 };
                    example_loss -= if slot == 0 { s.ln() } else { (1.0 - s).ln() };
                    let g = s - label;
                    for d in 0..dim {
                        grad_h[d] += g * row[d];
                        row[d] -= lr * g * h[d];
                    }
                }
                // exact gradient of the mean: grad_h / |context| per slot
                for &c in &context {
                    let row = &mut input[c * dim..(c + 1) * dim];
                    for d in 0..dim {
                        row[d] -= lr * grad_h[d] * inv;
                    }
                }
                epoch_loss += example_loss;
                epoch_updates += 1;
            }
        }
        epoch_mean_loss.push(if epoch_updates > 0 {
            epoch_loss / epoch_updates as f64
        } else {
            0.0
        });
    }

    let terms: Vec<String> = vocab.terms().to_vec();
    let mut space = EmbeddingSpace::from_vectors(terms, input, dim);
    space.meta = Some(TrainingMeta {
        params: params.clone(),
        epoch_mean_loss,
    });
    Ok(space)
}

/// Write the text vector format: a `V dim` header line, then one line per
/// term with its components.
pub fn save_text(space: &EmbeddingSpace, path: &Path) -> Result<(), EmbedError> {
    let io_err = |e: std::io::Error| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "{} {}", space.len(), space.dim).map_err(io_err)?;
    for (i, term) in space.terms.iter().enumerate() {
        write!(w, "{term}").map_err(io_err)?;
        for &x in space.vector_by_id(i) {
            write!(w, " {x}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    format_version: u32,
    dim: usize,
    terms: Vec<String>,
}

const BINARY_FORMAT_VERSION: u32 = 1;

/// Binary vector format: a JSON header line (terms, dimension) followed by
/// a dense row-major little-endian f64 block, like the topic-model file.
pub fn save_binary(space: &EmbeddingSpace, path: &Path) -> Result<(), EmbedError> {
    let io_err = |e: std::io::Error| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let header = BinaryHeader {
        format_version: BINARY_FORMAT_VERSION,
        dim: space.dim,
        terms: space.terms.clone(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let header = serde_json::to_string(&header).expect("header serializes");
    writeln!(w, "{header}").map_err(io_err)?;
    for &x in &space.vectors {
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_binary(path: &Path) -> Result<EmbeddingSpace, EmbedError> {
    let io_err = |e: std::io::Error| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let bad = |reason: String| EmbedError::Format {
        path: path.display().to_string(),
        reason,
    };
    let bytes = std::fs::read(path).map_err(io_err)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header: BinaryHeader =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format_version != BINARY_FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let body = &bytes[newline + 1..];
    let expected = header.terms.len() * header.dim * 8;
    if body.len() != expected {
        return Err(bad(format!(
            "expected {expected} data bytes, found {}",
            body.len()
        )));
    }
    let vectors: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(EmbeddingSpace::from_vectors(
        header.terms,
        vectors,
        header.dim,
    ))
}

pub fn load_text(path: &Path) -> Result<EmbeddingSpace, EmbedError> {
    let io_err = |e: std::io::Error| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let bad = |reason: String| EmbedError::Format {
        path: path.display().to_string(),
        reason,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(io_err)?;
    let mut parts = header.split_whitespace();
    let v: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad vocabulary size".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad dimension".into()))?;
    let mut terms = Vec::with_capacity(v);
    let mut vectors = Vec::with_capacity(v * dim);
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let term = parts.next().ok_or_else(|| bad("missing term".into()))?;
        terms.push(term.to_owned());
        let mut n = 0;
        for p in parts {
            vectors.push(p.parse().map_err(|_| bad(format!("bad value {p:?}")))?);
            n += 1;
        }
        if n != dim {
            return Err(bad(format!("term {term:?} has {n} values, expected {dim}")));
        }
    }
    if terms.len() != v {
        return Err(bad(format!("expected {v} terms, found {}", terms.len())));
    }
    Ok(EmbeddingSpace::from_vectors(terms, vectors, dim))
}
