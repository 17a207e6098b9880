//! Topic modeling over a weighted term-document matrix: LDA trained by
//! collapsed Gibbs sampling, per-document mixture inference, topic
//! prevalence, word saliency, and a 2-D inter-topic map.
//!
//! Real-valued cell weights enter the sampler as integer pseudo-counts
//! `round(weight * count_scale)`, so the chain stays an ordinary collapsed
//! Gibbs sampler with exact count bookkeeping. Everything is sequential and
//! bit-deterministic under a fixed seed.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedDoc, Vocabulary};
use crate::weighting::WeightedMatrix;

#[derive(Debug, thiserror::Error)]
pub enum TopicsError {
    #[error("no mass to model: every pseudo-count rounded to zero")]
    NoMass,
    #[error("topic id {topic} out of range for {num_topics} topics")]
    BadTopicId { topic: usize, num_topics: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("total document length is zero")]
    ZeroTotalLength,
    #[error("term weights sum to zero")]
    ZeroTermWeights,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad model file {path}: {reason}")]
    Format { path: String, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaParams {
    pub num_topics: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Pseudo-count scale applied to real-valued cell weights.
    pub count_scale: f64,
}

impl LdaParams {
    /// Conventional defaults for a given topic count: `alpha = 50/K`,
    /// `beta = 0.01`.
    pub fn for_topics(num_topics: usize) -> Self {
        LdaParams {
            num_topics,
            iterations: 500,
            alpha: 50.0 / num_topics.max(1) as f64,
            beta: 0.01,
            seed: 42,
            count_scale: 10.0,
        }
    }
}

/// A trained topic model: `phi[k]` is the word distribution of topic `k`,
/// `theta[d]` the topic mixture of document `d`; both row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub count_scale: f64,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Collapsed Gibbs sampling
// ---------------------------------------------------------------------------

struct GibbsState {
    num_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    /// Term id per token instance, per document.
    tokens: Vec<Vec<usize>>,
    /// Topic assignment per token instance, per document.
    assignments: Vec<Vec<usize>>,
    ndk: Vec<Vec<u32>>,
    nkv: Vec<Vec<u32>>,
    nd: Vec<u64>,
    nk: Vec<u64>,
    total_tokens: u64,
}

impl GibbsState {
    fn init(
        docs: &[Vec<(usize, u32)>],
        vocab_size: usize,
        num_topics: usize,
        alpha: f64,
        beta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let num_docs = docs.len();
        let mut state = GibbsState {
            num_topics,
            vocab_size,
            alpha,
            beta,
            tokens: Vec::with_capacity(num_docs),
            assignments: Vec::with_capacity(num_docs),
            ndk: vec![vec![0; num_topics]; num_docs],
            nkv: vec![vec![0; vocab_size]; num_topics],
            nd: vec![0; num_docs],
            nk: vec![0; num_topics],
            total_tokens: 0,
        };
        for (d, doc) in docs.iter().enumerate() {
            let mut toks = Vec::new();
            let mut assigns = Vec::new();
            for &(term, count) in doc {
                for _ in 0..count {
                    let k = rng.gen_range(0..num_topics);
                    toks.push(term);
                    assigns.push(k);
                    state.ndk[d][k] += 1;
                    state.nkv[k][term] += 1;
                    state.nd[d] += 1;
                    state.nk[k] += 1;
                    state.total_tokens += 1;
                }
            }
            state.tokens.push(toks);
            state.assignments.push(assigns);
        }
        state
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, cumulative: &mut [f64]) {
        let v_beta = self.vocab_size as f64 * self.beta;
        for d in 0..self.tokens.len() {
            for i in 0..self.tokens[d].len() {
                let term = self.tokens[d][i];
                let old = self.assignments[d][i];
                self.ndk[d][old] -= 1;
                self.nkv[old][term] -= 1;
                self.nd[d] -= 1;
                self.nk[old] -= 1;

                let mut total = 0.0;
                for k in 0..self.num_topics {
                    let w = (self.ndk[d][k] as f64 + self.alpha)
                        * (self.nkv[k][term] as f64 + self.beta)
                        / (self.nk[k] as f64 + v_beta);
                    total += w;
                    cumulative[k] = total;
                }
                let draw = rng.gen::<f64>() * total;
                let new = cumulative[..self.num_topics]
                    .iter()
                    .position(|&cum| draw < cum)
                    .unwrap_or(self.num_topics - 1);

                self.assignments[d][i] = new;
                self.ndk[d][new] += 1;
                self.nkv[new][term] += 1;
                self.nd[d] += 1;
                self.nk[new] += 1;
            }
        }
        debug_assert_eq!(self.nk.iter().sum::<u64>(), self.total_tokens);
    }

    fn phi(&self) -> Vec<Vec<f64>> {
        let v_beta = self.vocab_size as f64 * self.beta;
        (0..self.num_topics)
            .map(|k| {
                let denom = self.nk[k] as f64 + v_beta;
                (0..self.vocab_size)
                    .map(|v| (self.nkv[k][v] as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    fn theta(&self) -> Vec<Vec<f64>> {
        let k_alpha = self.num_topics as f64 * self.alpha;
        (0..self.tokens.len())
            .map(|d| {
                let denom = self.nd[d] as f64 + k_alpha;
                (0..self.num_topics)
                    .map(|k| (self.ndk[d][k] as f64 + self.alpha) / denom)
                    .collect()
            })
            .collect()
    }
}

/// Quantize weights into per-document pseudo-count lists. Cells that round
/// to zero are dropped.
fn pseudo_count_docs(m: &WeightedMatrix, scale: f64) -> Vec<Vec<(usize, u32)>> {
    let mut docs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); m.num_docs];
    for t in 0..m.num_terms {
        for &(d, w) in m.row(t) {
            let c = (w * scale).round();
            if c >= 1.0 {
                docs[d].push((t, c as u32));
            }
        }
    }
    docs
}

/// Pseudo-token count per document under the model's scale; these are the
/// document lengths prevalence is weighted by.
pub fn pseudo_doc_lengths(m: &WeightedMatrix, scale: f64) -> Vec<f64> {
    let mut lengths = vec![0.0; m.num_docs];
    for t in 0..m.num_terms {
        for &(d, w) in m.row(t) {
            let c = (w * scale).round();
            if c >= 1.0 {
                lengths[d] += c;
            }
        }
    }
    lengths
}

/// Pseudo-token mass per term; the corpus frequencies saliency normalizes.
pub fn pseudo_term_masses(m: &WeightedMatrix, scale: f64) -> Vec<f64> {
    (0..m.num_terms)
        .map(|t| {
            m.row(t)
                .iter()
                .map(|&(_, w)| {
                    let c = (w * scale).round();
                    if c >= 1.0 {
                        c
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Train LDA by collapsed Gibbs sampling over the pseudo-count expansion of
/// `m`. Deterministic for a fixed seed.
pub fn train_lda(m: &WeightedMatrix, params: &LdaParams) -> Result<TopicModel, TopicsError> {
    let docs = pseudo_count_docs(m, params.count_scale);
    if docs.iter().all(|d| d.is_empty()) {
        return Err(TopicsError::NoMass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = GibbsState::init(
        &docs,
        m.num_terms,
        params.num_topics,
        params.alpha,
        params.beta,
        &mut rng,
    );
    let mut cumulative = vec![0.0; params.num_topics];
    for _ in 0..params.iterations {
        state.sweep(&mut rng, &mut cumulative);
    }
    Ok(TopicModel {
        num_topics: params.num_topics,
        vocab_size: m.num_terms,
        num_docs: m.num_docs,
        alpha: params.alpha,
        beta: params.beta,
        seed: params.seed,
        iterations: params.iterations,
        count_scale: params.count_scale,
        phi: state.phi(),
        theta: state.theta(),
    })
}

/// Topic mixture of one document inferred with `phi` held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct DocMixture {
    pub theta: Vec<f64>,
    /// The document had tokens but none in the model vocabulary.
    pub oov: bool,
}

pub fn infer_doc_topics(
    model: &TopicModel,
    doc: &TokenizedDoc,
    vocab: &Vocabulary,
    iterations: usize,
    seed: u64,
) -> DocMixture {
    let k = model.num_topics;
    let ids: Vec<usize> = doc.tokens.iter().filter_map(|t| vocab.id(t)).collect();
    if ids.is_empty() {
        return DocMixture {
            theta: vec![1.0 / k as f64; k],
            oov: !doc.tokens.is_empty(),
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ndk = vec![0u32; k];
    let mut assignments: Vec<usize> = ids
        .iter()
        .map(|_| {
            let z = rng.gen_range(0..k);
            ndk[z] += 1;
            z
        })
        .collect();
    let mut cumulative = vec![0.0; k];
    for _ in 0..iterations {
        for (i, &term) in ids.iter().enumerate() {
            let old = assignments[i];
            ndk[old] -= 1;
            let mut total = 0.0;
            for (topic, cum) in cumulative.iter_mut().enumerate() {
                total += model.phi[topic][term] * (ndk[topic] as f64 + model.alpha);
                *cum = total;
            }
            let draw = rng.gen::<f64>() * total;
            let new = cumulative.iter().position(|&c| draw < c).unwrap_or(k - 1);
            assignments[i] = new;
            ndk[new] += 1;
        }
    }
    let denom = ids.len() as f64 + k as f64 * model.alpha;
    DocMixture {
        theta: (0..k)
            .map(|topic| (ndk[topic] as f64 + model.alpha) / denom)
            .collect(),
        oov: false,
    }
}

/// Length-weighted average of theta rows: the probability that a randomly
/// chosen token was generated by each topic.
pub fn topic_prevalence(model: &TopicModel, doc_lengths: &[f64]) -> Result<Vec<f64>, TopicsError> {
    if doc_lengths.len() != model.num_docs {
        return Err(TopicsError::LengthMismatch {
            expected: model.num_docs,
            got: doc_lengths.len(),
        });
    }
    let total: f64 = doc_lengths.iter().sum();
    if total <= 0.0 {
        return Err(TopicsError::ZeroTotalLength);
    }
    let mut prevalence = vec![0.0; model.num_topics];
    for (d, row) in model.theta.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            prevalence[k] += doc_lengths[d] * p;
        }
    }
    for p in &mut prevalence {
        *p /= total;
    }
    Ok(prevalence)
}

// ---------------------------------------------------------------------------
// Saliency
// ---------------------------------------------------------------------------

/// Per-term saliency: `P(w)` times the KL divergence of `P(T|w)` from the
/// global topic distribution. Terms with zero topic mass are flagged and get
/// saliency 0.
#[derive(Debug, Clone)]
pub struct SaliencyTable {
    pub saliency: Vec<f64>,
    pub p_word: Vec<f64>,
    /// `topic_given_word[w][k] = P(T=k | w)`.
    pub topic_given_word: Vec<Vec<f64>>,
    pub zero_mass: Vec<bool>,
}

pub fn word_saliency(
    model: &TopicModel,
    prevalence: &[f64],
    term_weights: &[f64],
) -> Result<SaliencyTable, TopicsError> {
    if prevalence.len() != model.num_topics {
        return Err(TopicsError::LengthMismatch {
            expected: model.num_topics,
            got: prevalence.len(),
        });
    }
    if term_weights.len() != model.vocab_size {
        return Err(TopicsError::LengthMismatch {
            expected: model.vocab_size,
            got: term_weights.len(),
        });
    }
    let weight_total: f64 = term_weights.iter().sum();
    if weight_total <= 0.0 {
        return Err(TopicsError::ZeroTermWeights);
    }

    let v = model.vocab_size;
    let k = model.num_topics;
    let mut table = SaliencyTable {
        saliency: vec![0.0; v],
        p_word: term_weights.iter().map(|w| w / weight_total).collect(),
        topic_given_word: vec![vec![0.0; k]; v],
        zero_mass: vec![false; v],
    };
    for w in 0..v {
        let mut denom = 0.0;
        for t in 0..k {
            denom += model.phi[t][w] * prevalence[t];
        }
        if denom <= 0.0 {
            table.zero_mass[w] = true;
            continue;
        }
        let mut kl = 0.0;
        for t in 0..k {
            let ptw = model.phi[t][w] * prevalence[t] / denom;
            table.topic_given_word[w][t] = ptw;
            if ptw > 0.0 {
                kl += ptw * (ptw / prevalence[t]).ln();
            }
        }
        table.saliency[w] = table.p_word[w] * kl;
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Top terms
// ---------------------------------------------------------------------------

/// The `n` most probable terms of a topic by `P(w|T)`, ties broken by
/// term id. `n` larger than the vocabulary returns every term.
pub fn top_terms(
    model: &TopicModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(usize, f64)>, TopicsError> {
    if topic >= model.num_topics {
        return Err(TopicsError::BadTopicId {
            topic,
            num_topics: model.num_topics,
        });
    }
    let mut ranked: Vec<(usize, f64)> = model.phi[topic].iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

/// Terms ranked by the share of their saliency attributable to `topic`:
/// `saliency(w) · P(T|w)`.
pub fn top_terms_by_saliency(
    model: &TopicModel,
    table: &SaliencyTable,
    topic: usize,
    n: usize,
) -> Result<Vec<(usize, f64)>, TopicsError> {
    if topic >= model.num_topics {
        return Err(TopicsError::BadTopicId {
            topic,
            num_topics: model.num_topics,
        });
    }
    let mut ranked: Vec<(usize, f64)> = (0..model.vocab_size)
        .map(|w| (w, table.saliency[w] * table.topic_given_word[w][topic]))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

// ---------------------------------------------------------------------------
// Inter-topic map
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicMapLayout {
    pub points: Vec<MapPoint>,
    /// Kruskal stress between input and embedded distances; 0 when the
    /// distances embed exactly in the plane.
    pub stress: f64,
}

fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / qi).ln() } else { 0.0 })
        .sum()
}

/// Jensen-Shannon distance: the square root of JS divergence, which is a
/// metric.
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| (a + b) / 2.0).collect();
    let jsd = 0.5 * kl_divergence(p, &m) + 0.5 * kl_divergence(q, &m);
    jsd.max(0.0).sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Classical (Torgerson) MDS to 2-D: double-center the squared distances and
/// project on the top two eigenvectors. Returns coordinates and the Kruskal
/// stress against the input distances.
pub fn classical_mds(dist: &[Vec<f64>]) -> (Vec<(f64, f64)>, f64) {
    let n = dist.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    if n == 1 {
        return (vec![(0.0, 0.0)], 0.0);
    }
    let d2: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| row.iter().map(|&x| x * x).collect())
        .collect();
    let row_means: Vec<f64> = d2
        .iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -0.5 * (d2[i][j] - row_means[i] - row_means[j] + grand);
        }
    }
    let (eigenvalues, vectors) = symmetric_eigen(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
    let (e1, e2) = (order[0], order[1]);
    let s1 = eigenvalues[e1].max(0.0).sqrt();
    let s2 = eigenvalues[e2].max(0.0).sqrt();
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| (vectors[i][e1] * s1, vectors[i][e2] * s2))
        .collect();

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i].0 - coords[j].0;
            let dy = coords[i].1 - coords[j].1;
            let embedded = (dx * dx + dy * dy).sqrt();
            num += (embedded - dist[i][j]) * (embedded - dist[i][j]);
            den += dist[i][j] * dist[i][j];
        }
    }
    let stress = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    (coords, stress)
}

/// 2-D topic map: Jensen-Shannon distances between topic-word rows embedded
/// with classical MDS; circle area equals prevalence. Axis signs are fixed so
/// the highest-prevalence topic sits in the nonnegative quadrant, removing
/// the reflection ambiguity.
pub fn topic_map_layout(
    model: &TopicModel,
    prevalence: &[f64],
) -> Result<TopicMapLayout, TopicsError> {
    if prevalence.len() != model.num_topics {
        return Err(TopicsError::LengthMismatch {
            expected: model.num_topics,
            got: prevalence.len(),
        });
    }
    let k = model.num_topics;
    let radius = |p: f64| (p.max(0.0) / std::f64::consts::PI).sqrt();
    if k == 1 {
        return Ok(TopicMapLayout {
            points: vec![MapPoint {
                x: 0.0,
                y: 0.0,
                radius: radius(prevalence[0]),
            }],
            stress: 0.0,
        });
    }
    let mut dist = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = js_distance(&model.phi[i], &model.phi[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let (mut coords, stress) = classical_mds(&dist);

    let anchor = prevalence
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if coords[anchor].0 < 0.0 {
        for c in &mut coords {
            c.0 = -c.0;
        }
    }
    if coords[anchor].1 < 0.0 {
        for c in &mut coords {
            c.1 = -c.1;
        }
    }

    Ok(TopicMapLayout {
        points: coords
            .into_iter()
            .zip(prevalence)
            .map(|((x, y), &p)| MapPoint {
                x,
                y,
                radius: radius(p),
            })
            .collect(),
        stress,
    })
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    num_topics: usize,
    vocab_size: usize,
    num_docs: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    count_scale: f64,
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Write the model as a JSON header line followed by dense row-major
/// little-endian f64 blocks for phi and theta.
pub fn write_model(path: &Path, model: &TopicModel) -> Result<(), TopicsError> {
    let io_err = |e: std::io::Error| TopicsError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let header = ModelHeader {
        format_version: MODEL_FORMAT_VERSION,
        num_topics: model.num_topics,
        vocab_size: model.vocab_size,
        num_docs: model.num_docs,
        alpha: model.alpha,
        beta: model.beta,
        seed: model.seed,
        iterations: model.iterations,
        count_scale: model.count_scale,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let header = serde_json::to_string(&header).expect("header serializes");
    writeln!(w, "{header}").map_err(io_err)?;
    for row in model.phi.iter().chain(model.theta.iter()) {
        for &x in row {
            w.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_model(path: &Path) -> Result<TopicModel, TopicsError> {
    let io_err = |e: std::io::Error| TopicsError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let bad = |reason: String| TopicsError::Format {
        path: path.display().to_string(),
        reason,
    };
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header: ModelHeader =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format_version != MODEL_FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let body = &bytes[newline + 1..];
    let expected =
        (header.num_topics * header.vocab_size + header.num_docs * header.num_topics) * 8;
    if body.len() != expected {
        return Err(bad(format!(
            "expected {expected} data bytes, found {}",
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let phi: Vec<Vec<f64>> = (0..header.num_topics)
        .map(|_| {
            (0..header.vocab_size)
                .map(|_| values.next().expect("sized"))
                .collect()
        })
        .collect();
    let theta: Vec<Vec<f64>> = (0..header.num_docs)
        .map(|_| {
            (0..header.num_topics)
                .map(|_| values.next().expect("sized"))
                .collect()
        })
        .collect();
    Ok(TopicModel {
        num_topics: header.num_topics,
        vocab_size: header.vocab_size,
        num_docs: header.num_docs,
        alpha: header.alpha,
        beta: header.beta,
        seed: header.seed,
        iterations: header.iterations,
        count_scale: header.count_scale,
        phi,
        theta,
    })
}
