//! Sparse term-document matrices and the weighting schemes applied to them
//! before topic modeling: TF-IDF, log-entropy, and their entrywise mean.
//!
//! Storage is term-major: one sorted `(doc, value)` run per term row, so
//! every weighting is a pure per-row transform.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedDoc, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum WeightingError {
    #[error("sparsity patterns differ at term {term}")]
    PatternMismatch { term: usize },
    #[error("matrix dimensions differ: {a_docs}x{a_terms} vs {b_docs}x{b_terms}")]
    DimensionMismatch {
        a_docs: usize,
        a_terms: usize,
        b_docs: usize,
        b_terms: usize,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad matrix file {path}: {reason}")]
    Format { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    RawCount,
    TfIdf,
    LogEntropy,
    HybridMean,
}

/// Raw term-document counts, term-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    pub num_docs: usize,
    pub num_terms: usize,
    /// `rows[t]` holds `(doc, count)` with doc ascending and count > 0.
    rows: Vec<Vec<(usize, u32)>>,
}

/// Real-valued weights on the same sparsity pattern as the counts they came
/// from. Exact zeros stay stored so the pattern is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub num_docs: usize,
    pub num_terms: usize,
    pub scheme: WeightScheme,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TermDocMatrix {
    pub fn row(&self, term: usize) -> &[(usize, u32)] {
        &self.rows[term]
    }

    /// Number of documents containing the term.
    pub fn doc_frequency(&self, term: usize) -> usize {
        self.rows[term].len()
    }

    pub fn entry(&self, term: usize, doc: usize) -> u32 {
        self.rows[term]
            .binary_search_by_key(&doc, |&(d, _)| d)
            .map(|i| self.rows[term][i].1)
            .unwrap_or(0)
    }

    /// Counts reinterpreted as weights, for pipelines that skip weighting.
    pub fn to_weighted(&self) -> WeightedMatrix {
        WeightedMatrix {
            num_docs: self.num_docs,
            num_terms: self.num_terms,
            scheme: WeightScheme::RawCount,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(d, c)| (d, c as f64)).collect())
                .collect(),
        }
    }
}

impl WeightedMatrix {
    pub fn row(&self, term: usize) -> &[(usize, f64)] {
        &self.rows[term]
    }

    pub fn entry(&self, term: usize, doc: usize) -> f64 {
        self.rows[term]
            .binary_search_by_key(&doc, |&(d, _)| d)
            .map(|i| self.rows[term][i].1)
            .unwrap_or(0.0)
    }

    pub fn max_weight(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, w)| w))
            .fold(0.0, f64::max)
    }

    /// Total weight per document (column sums).
    pub fn doc_masses(&self) -> Vec<f64> {
        let mut masses = vec![0.0; self.num_docs];
        for row in &self.rows {
            for &(d, w) in row {
                masses[d] += w;
            }
        }
        masses
    }

    /// Total weight per term (row sums).
    pub fn term_masses(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, w)| w).sum())
            .collect()
    }

    fn same_pattern(&self, other: &Self) -> Result<(), WeightingError> {
        if self.num_docs != other.num_docs || self.num_terms != other.num_terms {
            return Err(WeightingError::DimensionMismatch {
                a_docs: self.num_docs,
                a_terms: self.num_terms,
                b_docs: other.num_docs,
                b_terms: other.num_terms,
            });
        }
        for t in 0..self.num_terms {
            if self.rows[t].len() != other.rows[t].len()
                || self.rows[t]
                    .iter()
                    .zip(&other.rows[t])
                    .any(|(&(d1, _), &(d2, _))| d1 != d2)
            {
                return Err(WeightingError::PatternMismatch { term: t });
            }
        }
        Ok(())
    }
}

/// Count occurrences of vocabulary terms per document. Out-of-vocabulary
/// tokens are ignored.
pub fn count_matrix(docs: &[TokenizedDoc], vocab: &Vocabulary) -> TermDocMatrix {
    let mut rows: Vec<Vec<(usize, u32)>> = vec![Vec::new(); vocab.len()];
    for (d, doc) in docs.iter().enumerate() {
        let mut counts: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
        for tok in &doc.tokens {
            if let Some(t) = vocab.id(tok) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut ids: Vec<usize> = counts.keys().copied().collect();
        ids.sort_unstable();
        for t in ids {
            rows[t].push((d, counts[&t]));
        }
    }
    TermDocMatrix {
        num_docs: docs.len(),
        num_terms: vocab.len(),
        rows,
    }
}

/// Log-entropy weighting.
///
/// `local(t,d) = ln(tf + 1)`; the global factor is 1 plus the (negative)
/// entropy of the term's distribution over documents, normalized by
/// `ln(N + 1)`. A term spread evenly over many documents approaches 0, a
/// term concentrated in one document gets 1. `0·ln 0` counts as 0 and the
/// result is clamped at 0 against floating-point undershoot.
pub fn log_entropy(m: &TermDocMatrix) -> WeightedMatrix {
    let norm = ((m.num_docs + 1) as f64).ln();
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let total: f64 = row.iter().map(|&(_, c)| c as f64).sum();
            let mut entropy_sum = 0.0;
            for &(_, c) in row {
                let p = c as f64 / total;
                if p > 0.0 {
                    entropy_sum += p * p.ln();
                }
            }
            let global = (1.0 + entropy_sum / norm).max(0.0);
            row.iter()
                .map(|&(d, c)| (d, (c as f64 + 1.0).ln() * global))
                .collect()
        })
        .collect();
    WeightedMatrix {
        num_docs: m.num_docs,
        num_terms: m.num_terms,
        scheme: WeightScheme::LogEntropy,
        rows,
    }
}

/// Global weight of one term row, exposed for diagnostics and tests.
pub fn log_entropy_global(row: &[(usize, u32)], num_docs: usize) -> f64 {
    let total: f64 = row.iter().map(|&(_, c)| c as f64).sum();
    if total == 0.0 {
        return 0.0;
    }
    let norm = ((num_docs + 1) as f64).ln();
    let entropy_sum: f64 = row
        .iter()
        .map(|&(_, c)| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum();
    (1.0 + entropy_sum / norm).max(0.0)
}

/// Plain TF-IDF: `tf · ln(N / df)`. A term present in every document gets
/// weight 0 everywhere.
pub fn tf_idf(m: &TermDocMatrix) -> WeightedMatrix {
    let n = m.num_docs as f64;
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let idf = if row.is_empty() {
                0.0
            } else {
                (n / row.len() as f64).ln()
            };
            row.iter().map(|&(d, c)| (d, c as f64 * idf)).collect()
        })
        .collect();
    WeightedMatrix {
        num_docs: m.num_docs,
        num_terms: m.num_terms,
        scheme: WeightScheme::TfIdf,
        rows,
    }
}

/// Entrywise arithmetic mean of two matrices with identical patterns.
pub fn hybrid_mean(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
) -> Result<WeightedMatrix, WeightingError> {
    a.same_pattern(b)?;
    let rows = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(&(d, wa), &(_, wb))| (d, (wa + wb) / 2.0))
                .collect()
        })
        .collect();
    Ok(WeightedMatrix {
        num_docs: a.num_docs,
        num_terms: a.num_terms,
        scheme: WeightScheme::HybridMean,
        rows,
    })
}

/// Divide all weights by the matrix maximum so the largest entry is 1.
/// Returns the scaling constant (the old maximum); an all-zero matrix is
/// returned unchanged with constant 0.
pub fn scale_to_unit_max(m: &WeightedMatrix) -> (WeightedMatrix, f64) {
    let max = m.max_weight();
    if max <= 0.0 {
        return (m.clone(), 0.0);
    }
    let rows = m
        .rows
        .iter()
        .map(|r| r.iter().map(|&(d, w)| (d, w / max)).collect())
        .collect();
    (
        WeightedMatrix {
            num_docs: m.num_docs,
            num_terms: m.num_terms,
            scheme: m.scheme,
            rows,
        },
        max,
    )
}

/// Header line of the coordinate export format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub scheme: WeightScheme,
    pub num_docs: usize,
    pub num_terms: usize,
    /// Unit-max scaling constants applied upstream, if any, keyed by scheme
    /// name. Recorded so a run can be reproduced exactly.
    #[serde(default)]
    pub scaling: std::collections::BTreeMap<String, f64>,
}

/// Write `term_id doc_id value` triples under a JSON header line.
pub fn write_coordinate_file(
    path: &Path,
    m: &WeightedMatrix,
    scaling: &std::collections::BTreeMap<String, f64>,
) -> Result<(), WeightingError> {
    let io_err = |e: std::io::Error| WeightingError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let header = MatrixHeader {
        scheme: m.scheme,
        num_docs: m.num_docs,
        num_terms: m.num_terms,
        scaling: scaling.clone(),
    };
    let header = serde_json::to_string(&header).expect("header serializes");
    writeln!(w, "{header}").map_err(io_err)?;
    for (t, row) in m.rows.iter().enumerate() {
        for &(d, v) in row {
            writeln!(w, "{t} {d} {v}").map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_coordinate_file(path: &Path) -> Result<(WeightedMatrix, MatrixHeader), WeightingError> {
    let io_err = |e: std::io::Error| WeightingError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let bad = |reason: &str| WeightingError::Format {
        path: path.display().to_string(),
        reason: reason.to_owned(),
    };
    let file = File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .map_err(io_err)?;
    let header: MatrixHeader =
        serde_json::from_str(&header_line).map_err(|e| bad(&format!("bad header: {e}")))?;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); header.num_terms];
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let t: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad term id"))?;
        let d: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad doc id"))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad value"))?;
        if t >= header.num_terms || d >= header.num_docs {
            return Err(bad("entry out of bounds"));
        }
        rows[t].push((d, v));
    }
    // rows must be doc-sorted for entry lookups, whatever the file order
    for row in &mut rows {
        row.sort_unstable_by_key(|&(d, _)| d);
    }
    Ok((
        WeightedMatrix {
            num_docs: header.num_docs,
            num_terms: header.num_terms,
            scheme: header.scheme,
            rows,
        },
        header,
    ))
}
