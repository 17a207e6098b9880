//! Forum-corpus ingestion, tokenization, and vocabulary construction.
//!
//! The exchange format is JSONL, one thread per line:
//!
//! ```json
//! {"thread_id": "t1", "source": "forum", "category": "endocrinology",
//!  "created_at": "2014-03-02",
//!  "messages": [{"position": 0, "author_role": "patient", "text": "..."}]}
//! ```
//!
//! `category` and `created_at` may be null. Malformed lines are counted and
//! reported; in strict mode the first bad line aborts ingestion.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Who wrote a message. Forums mark professional answers explicitly;
/// everything unmarked is `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorRole {
    Patient,
    Doctor,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub thread_id: String,
    pub position: u32,
    pub author_role: AuthorRole,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thread {
    pub thread_id: String,
    pub source: String,
    pub category_label: Option<String>,
    pub created_at: Option<String>,
    pub messages: Vec<Message>,
}

impl Thread {
    /// Concatenation of all message texts in position order, used as the
    /// classification document for a whole thread.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&m.text);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub threads: Vec<Thread>,
}

impl Corpus {
    pub fn num_messages(&self) -> usize {
        self.threads.iter().map(|t| t.messages.len()).sum()
    }
}

// Wire format. `category` on disk maps to `category_label` in memory.
#[derive(Serialize, Deserialize)]
struct ThreadRecord {
    thread_id: String,
    source: String,
    category: Option<String>,
    created_at: Option<String>,
    messages: Vec<MessageRecord>,
}

#[derive(Serialize, Deserialize)]
struct MessageRecord {
    position: u32,
    author_role: AuthorRole,
    text: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Abort on the first malformed line instead of counting it.
    pub strict: bool,
    /// Accept messages with empty text.
    pub allow_empty_text: bool,
}

#[derive(Debug, Clone)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

/// Result of [`ingest`]: the parsed corpus plus everything that was wrong
/// with the input.
#[derive(Debug, Default)]
pub struct Ingested {
    pub corpus: Corpus,
    pub malformed: Vec<MalformedLine>,
    pub warnings: Vec<String>,
}

fn validate_date(s: &str) -> Result<(), String> {
    let b = s.as_bytes();
    let ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| (i == 4 || i == 7) || c.is_ascii_digit());
    if ok {
        Ok(())
    } else {
        Err(format!("created_at {s:?} is not YYYY-MM-DD"))
    }
}

fn validate_thread(rec: &ThreadRecord, opts: &IngestOptions) -> Result<(), String> {
    if rec.thread_id.is_empty() {
        return Err("empty thread_id".into());
    }
    if rec.messages.is_empty() {
        return Err(format!("thread {} has no messages", rec.thread_id));
    }
    if let Some(date) = &rec.created_at {
        validate_date(date)?;
    }
    let mut prev: Option<u32> = None;
    for m in &rec.messages {
        match prev {
            None if m.position != 0 => {
                return Err(format!(
                    "thread {}: first message position is {}, expected 0",
                    rec.thread_id, m.position
                ));
            }
            Some(p) if m.position <= p => {
                return Err(format!(
                    "thread {}: message positions not strictly increasing at {}",
                    rec.thread_id, m.position
                ));
            }
            _ => {}
        }
        prev = Some(m.position);
        if m.text.is_empty() && !opts.allow_empty_text {
            return Err(format!(
                "thread {}: empty text at position {}",
                rec.thread_id, m.position
            ));
        }
    }
    Ok(())
}

/// Parse a JSONL corpus file. Malformed lines (bad JSON, schema violations,
/// duplicate thread ids) are collected in [`Ingested::malformed`]; with
/// `strict` they become an error naming the first bad line.
pub fn ingest(path: &Path, opts: IngestOptions) -> Result<Ingested, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);

    let mut out = Ingested::default();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<ThreadRecord, _> = serde_json::from_str(&line);
        let reason = match parsed {
            Ok(rec) => match validate_thread(&rec, &opts) {
                Ok(()) if seen_ids.contains(&rec.thread_id) => {
                    Some(format!("duplicate thread_id {}", rec.thread_id))
                }
                Ok(()) => {
                    seen_ids.insert(rec.thread_id.clone());
                    let thread_id = rec.thread_id;
                    out.corpus.threads.push(Thread {
                        messages: rec
                            .messages
                            .into_iter()
                            .map(|m| Message {
                                thread_id: thread_id.clone(),
                                position: m.position,
                                author_role: m.author_role,
                                text: m.text,
                            })
                            .collect(),
                        thread_id,
                        source: rec.source,
                        category_label: rec.category,
                        created_at: rec.created_at,
                    });
                    None
                }
                Err(reason) => Some(reason),
            },
            Err(e) => Some(format!("invalid JSON: {e}")),
        };
        if let Some(reason) = reason {
            if opts.strict {
                return Err(CorpusError::Parse {
                    line: line_no,
                    reason,
                });
            }
            out.malformed.push(MalformedLine {
                line: line_no,
                reason,
            });
        }
    }
    if out.corpus.threads.is_empty() && out.malformed.is_empty() {
        out.warnings
            .push(format!("{}: empty corpus", path.display()));
    }
    Ok(out)
}

/// Write a corpus back to JSONL. `ingest(emit(c))` round-trips thread ids,
/// roles, and texts exactly.
pub fn emit(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    };
    for t in &corpus.threads {
        let rec = ThreadRecord {
            thread_id: t.thread_id.clone(),
            source: t.source.clone(),
            category: t.category_label.clone(),
            created_at: t.created_at.clone(),
            messages: t
                .messages
                .iter()
                .map(|m| MessageRecord {
                    position: m.position,
                    author_role: m.author_role,
                    text: m.text.clone(),
                })
                .collect(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| CorpusError::Parse {
            line: 0,
            reason: e.to_string(),
        })?;
        w.write_all(line.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Messages authored by patients, in thread order then position order.
pub fn patient_messages(corpus: &Corpus) -> Vec<&Message> {
    corpus
        .threads
        .iter()
        .flat_map(|t| t.messages.iter())
        .filter(|m| m.author_role == AuthorRole::Patient)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Tokenizer settings. Key phrases are merged greedily longest-first before
/// stopword removal, so a phrase may contain a stopword.
#[derive(Debug, Clone, Default)]
pub struct TokenizerConfig {
    pub case_fold: bool,
    pub stopwords: BTreeSet<String>,
    pub key_phrases: Vec<String>,
}

impl TokenizerConfig {
    pub fn new() -> Self {
        TokenizerConfig {
            case_fold: true,
            stopwords: BTreeSet::new(),
            key_phrases: Vec::new(),
        }
    }

    /// Key phrases pre-split into token sequences, longest first so greedy
    /// matching prefers the most specific phrase.
    fn phrase_tokens(&self) -> Vec<Vec<String>> {
        let mut phrases: Vec<Vec<String>> = self
            .key_phrases
            .iter()
            .map(|p| split_words(p, self.case_fold))
            .filter(|p| p.len() >= 2)
            .collect();
        phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        phrases
    }
}

/// Case-fold (optionally), strip everything outside letters/digits/underscore,
/// and split on whitespace.
fn split_words(text: &str, case_fold: bool) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            if case_fold {
                cleaned.extend(ch.to_lowercase());
            } else {
                cleaned.push(ch);
            }
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Tokenize one text: case-fold, strip punctuation, merge key phrases with
/// underscores, drop stopwords. Deterministic for identical (text, config).
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let words = split_words(text, config.case_fold);
    let phrases = config.phrase_tokens();

    let mut merged: Vec<String> = Vec::with_capacity(words.len());
    let mut i = 0;
    'outer: while i < words.len() {
        for phrase in &phrases {
            if words.len() - i >= phrase.len() && words[i..i + phrase.len()] == phrase[..] {
                merged.push(phrase.join("_"));
                i += phrase.len();
                continue 'outer;
            }
        }
        merged.push(words[i].clone());
        i += 1;
    }

    merged.retain(|t| !config.stopwords.contains(t));
    merged
}

pub fn tokenize_doc(doc_id: &str, text: &str, config: &TokenizerConfig) -> TokenizedDoc {
    TokenizedDoc {
        doc_id: doc_id.to_owned(),
        tokens: tokenize(text, config),
    }
}

/// True iff `needle` occurs as a contiguous run inside `haystack`. Used for
/// multiword dictionary entries matched against token streams.
pub fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Load a one-entry-per-line UTF-8 word list (stoplist, key phrases,
/// exclusion dictionary). Blank lines and `#` comments are skipped.
pub fn load_word_list(path: &Path) -> Result<Vec<String>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let entry = line.trim();
        if !entry.is_empty() && !entry.starts_with('#') {
            out.push(entry.to_owned());
        }
    }
    Ok(out)
}

/// Term statistics over a tokenized collection. Ids are dense `0..V-1`,
/// assigned in descending collection frequency with lexicographic
/// tie-breaking, so identical corpora always produce identical ids.
///
/// Serializes through [`VocabularyData`] (id-ordered arrays, no map), so the
/// bytes of a saved vocabulary are deterministic.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    term_to_id: HashMap<String, usize>,
    id_to_term: Vec<String>,
    doc_frequency: Vec<u64>,
    collection_frequency: Vec<u64>,
    num_docs: usize,
}

/// Wire form of [`Vocabulary`]: parallel arrays in id order.
#[derive(Serialize, Deserialize)]
pub struct VocabularyData {
    pub num_docs: usize,
    pub terms: Vec<String>,
    pub doc_frequency: Vec<u64>,
    pub collection_frequency: Vec<u64>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let term_to_id = data
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            term_to_id,
            id_to_term: data.terms,
            doc_frequency: data.doc_frequency,
            collection_frequency: data.collection_frequency,
            num_docs: data.num_docs,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            num_docs: v.num_docs,
            terms: v.id_to_term,
            doc_frequency: v.doc_frequency,
            collection_frequency: v.collection_frequency,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.id_to_term[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn doc_frequency(&self, id: usize) -> u64 {
        self.doc_frequency[id]
    }

    pub fn collection_frequency(&self, id: usize) -> u64 {
        self.collection_frequency[id]
    }

    /// SHA-256 over the id-ordered term list; identifies a vocabulary in
    /// model files so a model cannot be applied to the wrong vocabulary.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for term in &self.id_to_term {
            hasher.update(term.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Count term occurrences over `docs` and keep every term whose collection
/// frequency is at least `min_count`.
pub fn build_vocabulary(docs: &[TokenizedDoc], min_count: u64) -> Vocabulary {
    assert!(min_count >= 1, "min_count must be >= 1");
    let mut cf: HashMap<&str, u64> = HashMap::new();
    let mut df: HashMap<&str, u64> = HashMap::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for doc in docs {
        seen.clear();
        for tok in &doc.tokens {
            *cf.entry(tok).or_insert(0) += 1;
            if seen.insert(tok) {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
    }

    let mut kept: Vec<(&str, u64)> = cf
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(&t, &c)| (t, c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary {
        num_docs: docs.len(),
        ..Default::default()
    };
    for (term, count) in kept {
        let id = vocab.id_to_term.len();
        vocab.term_to_id.insert(term.to_owned(), id);
        vocab.id_to_term.push(term.to_owned());
        vocab.collection_frequency.push(count);
        vocab.doc_frequency.push(df[term]);
    }
    vocab
}
