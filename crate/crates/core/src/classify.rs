//! Weak-labeled training-set construction and a linear bag-of-words text
//! classifier with a hierarchical softmax output over a Huffman tree of
//! labels.
//!
//! A document is embedded as the mean of its term vectors; the label
//! likelihood is a product of sigmoid decisions along the label's Huffman
//! path, trained by SGD with a linearly decaying learning rate. Training is
//! sequential and bit-deterministic under a fixed seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{contains_phrase, tokenize, Corpus, TokenizedDoc, TokenizerConfig, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("no labels given")]
    NoLabels,
    #[error("label {label:?} has zero frequency")]
    ZeroFrequency { label: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("predictions and gold labels differ in length: {predictions} vs {gold}")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("cannot evaluate zero predictions")]
    EmptyEvaluation,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("model vocabulary hash mismatch: model {model}, supplied {supplied}")]
    VocabHashMismatch { model: String, supplied: String },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad model file {path}: {reason}")]
    Format { path: String, reason: String },
}

// ---------------------------------------------------------------------------
// Training-set construction
// ---------------------------------------------------------------------------

/// Seed rules for weak labeling. A thread whose tokens start with any
/// positive prefix at least `min_prefix_hits` times is positive; a thread
/// with zero prefix hits and no exclusion-dictionary entry is negative;
/// everything else is left unlabeled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRuleConfig {
    pub positive_prefixes: Vec<String>,
    pub min_prefix_hits: usize,
    /// Terms or multiword phrases whose presence disqualifies a thread from
    /// the negative class.
    pub exclusion_dictionary: BTreeSet<String>,
    pub positive_label: String,
    pub negative_label: String,
    /// Cap on negatives, taken evenly across `category_label` groups.
    pub max_negatives: Option<usize>,
}

impl Default for LabelRuleConfig {
    fn default() -> Self {
        LabelRuleConfig {
            positive_prefixes: vec!["diab".into(), "insulin".into()],
            min_prefix_hits: 3,
            exclusion_dictionary: BTreeSet::new(),
            positive_label: "DIABETES".into(),
            negative_label: "NO".into(),
            max_negatives: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDoc {
    pub doc: TokenizedDoc,
    pub label: String,
}

/// Apply the seed rules to every thread. The classification document for a
/// thread is the concatenation of all its messages.
pub fn build_training_set(
    corpus: &Corpus,
    rules: &LabelRuleConfig,
    tok_cfg: &TokenizerConfig,
) -> Vec<LabeledDoc> {
    let exclusion_phrases: Vec<Vec<String>> = rules
        .exclusion_dictionary
        .iter()
        .map(|e| tokenize(e, tok_cfg))
        .filter(|p| !p.is_empty())
        .collect();

    let mut positives: Vec<(usize, TokenizedDoc)> = Vec::new();
    // negatives grouped by category for stratified capping
    let mut negatives: BTreeMap<String, Vec<(usize, TokenizedDoc)>> = BTreeMap::new();

    for (idx, thread) in corpus.threads.iter().enumerate() {
        let tokens = tokenize(&thread.full_text(), tok_cfg);
        let prefix_hits = tokens
            .iter()
            .filter(|t| {
                rules
                    .positive_prefixes
                    .iter()
                    .any(|p| t.starts_with(p.as_str()))
            })
            .count();
        let doc = TokenizedDoc {
            doc_id: thread.thread_id.clone(),
            tokens,
        };
        if prefix_hits >= rules.min_prefix_hits {
            positives.push((idx, doc));
        } else if prefix_hits == 0
            && !exclusion_phrases
                .iter()
                .any(|p| contains_phrase(&doc.tokens, p))
        {
            let category = thread.category_label.clone().unwrap_or_default();
            negatives.entry(category).or_default().push((idx, doc));
        }
    }

    let selected_negatives: Vec<(usize, TokenizedDoc)> = match rules.max_negatives {
        Some(cap) => {
            // round-robin over categories in sorted order
            let mut queues: Vec<std::collections::VecDeque<(usize, TokenizedDoc)>> =
                negatives.into_values().map(Into::into).collect();
            let mut picked = Vec::new();
            while picked.len() < cap && queues.iter().any(|q| !q.is_empty()) {
                for q in &mut queues {
                    if picked.len() >= cap {
                        break;
                    }
                    if let Some(item) = q.pop_front() {
                        picked.push(item);
                    }
                }
            }
            picked
        }
        None => negatives.into_values().flatten().collect(),
    };

    let mut out: Vec<(usize, LabeledDoc)> = positives
        .into_iter()
        .map(|(i, doc)| {
            (
                i,
                LabeledDoc {
                    doc,
                    label: rules.positive_label.clone(),
                },
            )
        })
        .chain(selected_negatives.into_iter().map(|(i, doc)| {
            (
                i,
                LabeledDoc {
                    doc,
                    label: rules.negative_label.clone(),
                },
            )
        }))
        .collect();
    out.sort_by_key(|&(i, _)| i);
    out.into_iter().map(|(_, d)| d).collect()
}

/// Write the `label<TAB>doc_id` export of a labeled set.
pub fn export_labeled_tsv(path: &Path, labeled: &[LabeledDoc]) -> Result<(), ClassifyError> {
    let io_err = |e: std::io::Error| ClassifyError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for d in labeled {
        writeln!(w, "{}\t{}", d.label, d.doc.doc_id).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// Huffman tree over labels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HuffmanChild {
    Leaf(usize),
    Node(usize),
}

/// Optimal prefix code over labels, built by repeatedly merging the two
/// lowest-frequency nodes. Ties break toward the node containing the
/// lexicographically smallest label, so the tree is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuffmanTree {
    labels: Vec<String>,
    frequencies: Vec<u64>,
    /// Internal nodes; children index leaves or other internal nodes.
    nodes: Vec<[HuffmanChild; 2]>,
    root: Option<HuffmanChild>,
    /// Per-leaf path root→leaf as (internal node id, branch taken).
    paths: Vec<Vec<(usize, bool)>>,
}

impl HuffmanTree {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_internal_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn path(&self, leaf: usize) -> &[(usize, bool)] {
        &self.paths[leaf]
    }

    /// Bit path root→leaf.
    pub fn code(&self, leaf: usize) -> Vec<bool> {
        self.paths[leaf].iter().map(|&(_, bit)| bit).collect()
    }

    /// Frequency-weighted mean code length.
    pub fn expected_code_length(&self) -> f64 {
        let total: u64 = self.frequencies.iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.frequencies
            .iter()
            .enumerate()
            .map(|(i, &f)| f as f64 * self.paths[i].len() as f64)
            .sum::<f64>()
            / total as f64
    }
}

pub fn build_huffman_tree(
    label_frequencies: &BTreeMap<String, u64>,
) -> Result<HuffmanTree, ClassifyError> {
    if label_frequencies.is_empty() {
        return Err(ClassifyError::NoLabels);
    }
    for (label, &freq) in label_frequencies {
        if freq == 0 {
            return Err(ClassifyError::ZeroFrequency {
                label: label.clone(),
            });
        }
    }
    let labels: Vec<String> = label_frequencies.keys().cloned().collect();
    let frequencies: Vec<u64> = label_frequencies.values().copied().collect();

    // Active forest entries: (frequency, smallest contained label, node).
    let mut active: Vec<(u64, String, HuffmanChild)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (frequencies[i], l.clone(), HuffmanChild::Leaf(i)))
        .collect();
    let mut nodes: Vec<[HuffmanChild; 2]> = Vec::new();

    while active.len() > 1 {
        active.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let first = active.remove(0);
        let second = active.remove(0);
        let id = nodes.len();
        nodes.push([first.2, second.2]);
        let min_label = if first.1 <= second.1 {
            first.1
        } else {
            second.1
        };
        active.push((first.0 + second.0, min_label, HuffmanChild::Node(id)));
    }
    let root = active.pop().map(|(_, _, n)| n);

    let mut paths: Vec<Vec<(usize, bool)>> = vec![Vec::new(); labels.len()];
    if let Some(HuffmanChild::Node(_)) = root {
        let mut stack: Vec<(HuffmanChild, Vec<(usize, bool)>)> =
            vec![(root.expect("nonempty"), Vec::new())];
        while let Some((child, path)) = stack.pop() {
            match child {
                HuffmanChild::Leaf(leaf) => paths[leaf] = path,
                HuffmanChild::Node(id) => {
                    for (branch, &c) in nodes[id].iter().enumerate() {
                        let mut p = path.clone();
                        p.push((id, branch == 1));
                        stack.push((c, p));
                    }
                }
            }
        }
    }

    Ok(HuffmanTree {
        labels,
        frequencies,
        nodes,
        root,
        paths,
    })
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainParams {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Word n-gram order; 1 keeps unigram features only.
    pub word_ngrams: usize,
    /// Hash buckets for n-gram features beyond the unigram vocabulary.
    pub ngram_buckets: usize,
    /// Label reported for documents with no in-vocabulary feature. Defaults
    /// to the most frequent training label.
    pub default_label: Option<String>,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dim: 50,
            learning_rate: 0.1,
            epochs: 5,
            word_ngrams: 1,
            ngram_buckets: 1 << 16,
            default_label: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub vocab_hash: String,
    pub dim: usize,
    pub tree: HuffmanTree,
    pub params: TrainParams,
    pub default_label: String,
    /// (V + buckets) x dim when n-grams are on, V x dim otherwise.
    term_vectors: Vec<f64>,
    /// (L - 1) x dim, one per internal tree node.
    node_vectors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub probability: f64,
    /// Set when the document had no in-vocabulary feature and the default
    /// label was reported.
    pub oov: bool,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Map a token stream to feature row indices: unigram vocabulary ids plus,
/// when `word_ngrams > 1`, hashed n-gram buckets appended after the
/// vocabulary rows.
pub fn featurize(
    tokens: &[String],
    vocab: &Vocabulary,
    word_ngrams: usize,
    ngram_buckets: usize,
) -> Vec<usize> {
    let mut features: Vec<usize> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
    if word_ngrams > 1 {
        for n in 2..=word_ngrams {
            for window in tokens.windows(n) {
                let joined = window.join("\u{1f}");
                let bucket = (fnv1a(joined.as_bytes()) % ngram_buckets as u64) as usize;
                features.push(vocab.len() + bucket);
            }
        }
    }
    features
}

impl ClassifierModel {
    fn term_vector(&self, row: usize) -> &[f64] {
        &self.term_vectors[row * self.dim..(row + 1) * self.dim]
    }

    fn node_vector(&self, node: usize) -> &[f64] {
        &self.node_vectors[node * self.dim..(node + 1) * self.dim]
    }

    pub fn term_vectors(&self) -> &[f64] {
        &self.term_vectors
    }

    fn hidden(&self, features: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        if features.is_empty() {
            return h;
        }
        for &f in features {
            let v = self.term_vector(f);
            for (hi, vi) in h.iter_mut().zip(v) {
                *hi += vi;
            }
        }
        let inv = 1.0 / features.len() as f64;
        for hi in &mut h {
            *hi *= inv;
        }
        h
    }

    fn leaf_probability(&self, leaf: usize, h: &[f64]) -> f64 {
        let mut p = 1.0;
        for &(node, bit) in self.tree.path(leaf) {
            let s = sigmoid(dot(self.node_vector(node), h));
            p *= if bit { 1.0 - s } else { s };
        }
        p
    }

    /// Probability of every label for a document; sums to 1 up to floating
    /// error.
    pub fn label_probabilities(
        &self,
        doc: &TokenizedDoc,
        vocab: &Vocabulary,
    ) -> Vec<(String, f64)> {
        let features = featurize(
            &doc.tokens,
            vocab,
            self.params.word_ngrams,
            self.params.ngram_buckets,
        );
        let h = self.hidden(&features);
        (0..self.tree.num_labels())
            .map(|leaf| {
                (
                    self.tree.labels()[leaf].clone(),
                    self.leaf_probability(leaf, &h),
                )
            })
            .collect()
    }

    /// Most likely label with its path probability. Documents with no
    /// in-vocabulary feature fall back to the default label and set `oov`.
    pub fn predict(&self, doc: &TokenizedDoc, vocab: &Vocabulary) -> Prediction {
        let features = featurize(
            &doc.tokens,
            vocab,
            self.params.word_ngrams,
            self.params.ngram_buckets,
        );
        let h = self.hidden(&features);
        if features.is_empty() {
            let leaf = self.tree.label_index(&self.default_label).unwrap_or(0);
            return Prediction {
                label: self.default_label.clone(),
                probability: self.leaf_probability(leaf, &h),
                oov: true,
            };
        }
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for leaf in 0..self.tree.num_labels() {
            let p = self.leaf_probability(leaf, &h);
            if p > best_p {
                best = leaf;
                best_p = p;
            }
        }
        Prediction {
            label: self.tree.labels()[best].clone(),
            probability: best_p,
            oov: false,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let io_err = |e: std::io::Error| ClassifyError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        serde_json::to_writer(&mut w, &file).map_err(|e| ClassifyError::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        w.flush().map_err(io_err)
    }

    /// Load a model and verify it was trained against `vocab`.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<ClassifierModel, ClassifyError> {
        let io_err = |e: std::io::Error| ClassifyError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let data = std::fs::read_to_string(path).map_err(io_err)?;
        let file: ModelFile = serde_json::from_str(&data).map_err(|e| ClassifyError::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::UnsupportedVersion(file.format_version));
        }
        let supplied = vocab.content_hash();
        if supplied != file.model.vocab_hash {
            return Err(ClassifyError::VocabHashMismatch {
                model: file.model.vocab_hash,
                supplied,
            });
        }
        Ok(file.model)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: ClassifierModel,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Train by SGD over shuffled documents, minimizing the hierarchical-softmax
/// negative log-likelihood. Identical (data, params, seed) give bit-identical
/// vectors.
pub fn train(
    labeled: &[LabeledDoc],
    vocab: &Vocabulary,
    params: &TrainParams,
    seed: u64,
) -> Result<ClassifierModel, ClassifyError> {
    if labeled.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let mut freqs: BTreeMap<String, u64> = BTreeMap::new();
    for d in labeled {
        *freqs.entry(d.label.clone()).or_insert(0) += 1;
    }
    let tree = build_huffman_tree(&freqs)?;
    let default_label = params.default_label.clone().unwrap_or_else(|| {
        freqs
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(l, _)| l.clone())
            .expect("nonempty")
    });
    if let Some(requested) = &params.default_label {
        if tree.label_index(requested).is_none() {
            return Err(ClassifyError::UnknownLabel(requested.clone()));
        }
    }

    let num_feature_rows = if params.word_ngrams > 1 {
        vocab.len() + params.ngram_buckets
    } else {
        vocab.len()
    };
    let dim = params.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let mut term_vectors: Vec<f64> = (0..num_feature_rows * dim)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let mut node_vectors = vec![0.0; tree.num_internal_nodes() * dim];

    let leaf_of: Vec<usize> = labeled
        .iter()
        .map(|d| {
            tree.label_index(&d.label)
                .expect("label present in tree by construction")
        })
        .collect();
    let features: Vec<Vec<usize>> = labeled
        .iter()
        .map(|d| {
            featurize(
                &d.doc.tokens,
                vocab,
                params.word_ngrams,
                params.ngram_buckets,
            )
        })
        .collect();

    let total_steps = (params.epochs * labeled.len()).max(1) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    let mut h = vec![0.0; dim];
    let mut grad_h = vec![0.0; dim];

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = params.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            let feats = &features[i];
            if feats.is_empty() {
                continue;
            }
            // hidden = mean of feature vectors
            h.iter_mut().for_each(|x| *x = 0.0);
            for &f in feats {
                let row = &term_vectors[f * dim..(f + 1) * dim];
                for (hi, vi) in h.iter_mut().zip(row) {
                    *hi += vi;
                }
            }
            let inv = 1.0 / feats.len() as f64;
            h.iter_mut().for_each(|x| *x *= inv);

            grad_h.iter_mut().for_each(|x| *x = 0.0);
            for &(node, bit) in tree.path(leaf_of[i]) {
                let row = &mut node_vectors[node * dim..(node + 1) * dim];
                let s = sigmoid(dot(row, &h));
                let target = if bit { 0.0 } else { 1.0 };
                let g = s - target;
                for d in 0..dim {
                    grad_h[d] += g * row[d];
                    row[d] -= lr * g * h[d];
                }
            }
            // exact gradient of the mean: each feature row gets grad_h / n
            for &f in feats {
                let row = &mut term_vectors[f * dim..(f + 1) * dim];
                for d in 0..dim {
                    row[d] -= lr * grad_h[d] * inv;
                }
            }
        }
    }

    Ok(ClassifierModel {
        vocab_hash: vocab.content_hash(),
        dim,
        tree,
        params: params.clone(),
        default_label,
        term_vectors,
        node_vectors,
    })
}

/// Deterministic stratified split: per label, shuffle indices with the seed
/// and reserve `test_fraction` (rounded) for the test side.
pub fn stratified_split(
    labels: &[String],
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut idxs) in by_label {
        idxs.shuffle(&mut rng);
        let n_test = ((idxs.len() as f64 * test_fraction).round() as usize).min(idxs.len());
        test.extend_from_slice(&idxs[..n_test]);
        train.extend_from_slice(&idxs[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Confusion counts and the derived rates. Rates whose denominator is zero
/// are left undefined rather than propagated as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
    pub accuracy: f64,
    pub error_rate: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f_measure: Option<f64>,
}

pub fn metrics_from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Metrics {
    let total = (tp + fp + tn + fn_) as f64;
    let accuracy = if total > 0.0 {
        (tp + tn) as f64 / total
    } else {
        0.0
    };
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Metrics {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        accuracy,
        error_rate: 1.0 - accuracy,
        precision,
        recall,
        specificity,
        f_measure,
    }
}

/// Confusion-count metrics of predictions against gold labels, with
/// `positive_label` as the positive class; every other label counts as
/// negative.
pub fn evaluate(
    predictions: &[String],
    gold: &[String],
    positive_label: &str,
) -> Result<Metrics, ClassifyError> {
    if predictions.len() != gold.len() {
        return Err(ClassifyError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if predictions.is_empty() {
        return Err(ClassifyError::EmptyEvaluation);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (p, g) in predictions.iter().zip(gold) {
        match (p == positive_label, g == positive_label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(metrics_from_counts(tp, fp, tn, fn_))
}
