//! The pipeline stages behind each subcommand. Every stage validates its
//! inputs against the run manifest, writes its artifacts atomically, and
//! records hashes, warnings, and timing.

use std::collections::BTreeMap;
use std::path::Path;

use phenotype::analytics::{
    cross_tab, frequency_distribution, npmi, presence_from_theta, presence_from_word_lists,
    segment_by_kinship, segment_distribution, CrossTab, CrossTabAxis, KinshipConfig,
    PresenceMatrix, SegmentRecord,
};
use phenotype::classify::{
    build_training_set, evaluate, export_labeled_tsv, stratified_split, train as train_classifier,
    ClassifierModel, LabelRuleConfig, LabeledDoc, TrainParams,
};
use phenotype::corpus::{
    self, build_vocabulary, load_word_list, tokenize_doc, Corpus, IngestOptions, TokenizedDoc,
    TokenizerConfig, Vocabulary,
};
use phenotype::embed::{
    load_text as load_vectors, save_text as save_vectors, train_cbow, CbowParams,
};
use phenotype::refine::{expand_seed_cluster, refine_all, RefinedTopic, SeedCluster};
use phenotype::topics::{
    pseudo_doc_lengths, pseudo_term_masses, read_model, top_terms, topic_map_layout,
    topic_prevalence, train_lda, word_saliency, LdaParams, TopicModel,
};
use phenotype::weighting::{
    count_matrix, hybrid_mean, log_entropy, read_coordinate_file, scale_to_unit_max, tf_idf,
    write_coordinate_file,
};
use serde::{Deserialize, Serialize};

use crate::config::{canonical_json, DocUnit, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{load_manifest, save_manifest, sha256_hex, StageCtx};

const KINSHIP_EN: &str = include_str!("../packs/kinship_en.json");
const KINSHIP_IT: &str = include_str!("../packs/kinship_it.json");

pub fn run_stage(stage: &str, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Stage(format!("cannot create {}: {e}", cfg.out_dir.display())))?;

    let config_copy = canonical_json(cfg);
    let config_hash = sha256_hex(config_copy.as_bytes());
    crate::manifest::write_atomic(&cfg.out_dir.join("run_config.json"), config_copy.as_bytes())?;

    let mut manifest = load_manifest(&cfg.out_dir)?;
    manifest.tool_version = env!("CARGO_PKG_VERSION").to_owned();
    manifest.config_hash = config_hash;

    let mut ctx = StageCtx::new(&cfg.out_dir, manifest);
    match stage {
        "ingest" => stage_ingest(cfg, &mut ctx)?,
        "classify-train" => stage_classify_train(cfg, &mut ctx)?,
        "classify-predict" => stage_classify_predict(cfg, &mut ctx)?,
        "weight" => stage_weight(cfg, &mut ctx)?,
        "lda" => stage_lda(cfg, &mut ctx)?,
        "embed" => stage_embed(cfg, &mut ctx)?,
        "refine" => stage_refine(cfg, &mut ctx)?,
        "subtopics" => stage_subtopics(cfg, &mut ctx)?,
        "analyze" => stage_analyze(cfg, &mut ctx)?,
        "report" => stage_report(cfg, &mut ctx)?,
        other => return Err(CliError::Config(format!("unknown stage {other:?}"))),
    }
    let manifest = ctx.finish(stage);
    save_manifest(&cfg.out_dir, &manifest)
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn tokenizer_config(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<TokenizerConfig> {
    let mut tok = TokenizerConfig::new();
    tok.case_fold = cfg.tokenizer.case_fold;
    if let Some(path) = &cfg.stoplist {
        let path = ctx.consume_external(path)?;
        tok.stopwords = load_word_list(&path)
            .map_err(|e| CliError::Input(e.to_string()))?
            .into_iter()
            .collect();
    }
    if let Some(path) = &cfg.key_phrases {
        let path = ctx.consume_external(path)?;
        tok.key_phrases = load_word_list(&path).map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(tok)
}

fn load_corpus_artifact(path: &Path) -> Result<Corpus> {
    let ingested = corpus::ingest(path, IngestOptions::default())
        .map_err(|e| CliError::Input(e.to_string()))?;
    if !ingested.malformed.is_empty() {
        return Err(CliError::Input(format!(
            "{}: normalized corpus artifact has {} malformed lines",
            path.display(),
            ingested.malformed.len()
        )));
    }
    Ok(ingested.corpus)
}

/// The document units topic modeling and analytics run on: patient messages,
/// individually or concatenated per thread.
fn patient_documents(corpus: &Corpus, unit: DocUnit, tok: &TokenizerConfig) -> Vec<TokenizedDoc> {
    match unit {
        DocUnit::Message => corpus::patient_messages(corpus)
            .into_iter()
            .map(|m| tokenize_doc(&format!("{}:{}", m.thread_id, m.position), &m.text, tok))
            .collect(),
        DocUnit::Thread => corpus
            .threads
            .iter()
            .filter_map(|t| {
                let text: Vec<&str> = t
                    .messages
                    .iter()
                    .filter(|m| m.author_role == corpus::AuthorRole::Patient)
                    .map(|m| m.text.as_str())
                    .collect();
                if text.is_empty() {
                    None
                } else {
                    Some(tokenize_doc(&t.thread_id, &text.join(" "), tok))
                }
            })
            .collect(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn read_artifact_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Stage(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SourceStats {
    threads: usize,
    messages: usize,
}

#[derive(Serialize)]
struct CorpusStats {
    threads: usize,
    messages: usize,
    patient_messages: usize,
    malformed_lines: usize,
    sources: BTreeMap<String, SourceStats>,
}

fn stage_ingest(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let corpus_path = ctx.consume_external(&cfg.corpus)?;
    let ingested = corpus::ingest(
        &corpus_path,
        IngestOptions {
            strict: cfg.strict,
            allow_empty_text: false,
        },
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    for w in &ingested.warnings {
        ctx.warn(w.clone());
    }
    if !ingested.malformed.is_empty() {
        ctx.warn(format!(
            "{} malformed lines skipped (first at line {}: {})",
            ingested.malformed.len(),
            ingested.malformed[0].line,
            ingested.malformed[0].reason
        ));
    }

    let corpus = ingested.corpus;
    let mut sources: BTreeMap<String, SourceStats> = BTreeMap::new();
    for t in &corpus.threads {
        let entry = sources.entry(t.source.clone()).or_insert(SourceStats {
            threads: 0,
            messages: 0,
        });
        entry.threads += 1;
        entry.messages += t.messages.len();
    }
    let stats = CorpusStats {
        threads: corpus.threads.len(),
        messages: corpus.num_messages(),
        patient_messages: corpus::patient_messages(&corpus).len(),
        malformed_lines: ingested.malformed.len(),
        sources,
    };

    ctx.emit_with("corpus/threads.jsonl", |p| {
        corpus::emit(&corpus, p).map_err(|e| CliError::Stage(e.to_string()))
    })?;
    ctx.emit_bytes("corpus/stats.json", &to_json_pretty(&stats)?)
}

// ---------------------------------------------------------------------------
// classify-train / classify-predict
// ---------------------------------------------------------------------------

fn label_rules(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<LabelRuleConfig> {
    let mut rules = LabelRuleConfig {
        positive_prefixes: cfg.classify.positive_prefixes.clone(),
        min_prefix_hits: cfg.classify.min_prefix_hits,
        exclusion_dictionary: Default::default(),
        positive_label: cfg.classify.positive_label.clone(),
        negative_label: cfg.classify.negative_label.clone(),
        max_negatives: cfg.classify.max_negatives,
    };
    if let Some(path) = &cfg.classify.exclusion_dictionary {
        let path = ctx.consume_external(path)?;
        rules.exclusion_dictionary = load_word_list(&path)
            .map_err(|e| CliError::Input(e.to_string()))?
            .into_iter()
            .collect();
    }
    Ok(rules)
}

fn stage_classify_train(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let threads_path = ctx.consume_artifact("ingest", "corpus/threads.jsonl")?;
    let corpus = load_corpus_artifact(&threads_path)?;
    let tok = tokenizer_config(cfg, ctx)?;
    let rules = label_rules(cfg, ctx)?;

    let labeled = build_training_set(&corpus, &rules, &tok);
    if labeled.is_empty() {
        return Err(CliError::Stage(
            "seed rules labeled no threads; check positive_prefixes and the exclusion dictionary"
                .into(),
        ));
    }
    let positives = labeled
        .iter()
        .filter(|d| d.label == rules.positive_label)
        .count();
    if positives == 0 {
        ctx.warn("no thread matched the positive seed rule".to_owned());
    }
    ctx.emit_with("classify/labeled.tsv", |p| {
        export_labeled_tsv(p, &labeled).map_err(|e| CliError::Stage(e.to_string()))
    })?;

    let docs: Vec<TokenizedDoc> = labeled.iter().map(|d| d.doc.clone()).collect();
    let vocab = build_vocabulary(&docs, cfg.classify.min_count);
    if vocab.is_empty() {
        return Err(CliError::Stage(
            "classifier vocabulary is empty; lower classify.min_count".into(),
        ));
    }
    ctx.emit_bytes("classify/vocab.json", &to_json_pretty(&vocab)?)?;

    let labels: Vec<String> = labeled.iter().map(|d| d.label.clone()).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.classify.holdout_fraction, cfg.seed);
    let train_docs: Vec<LabeledDoc> = train_idx.iter().map(|&i| labeled[i].clone()).collect();
    let params = TrainParams {
        dim: cfg.classify.dim,
        learning_rate: cfg.classify.learning_rate,
        epochs: cfg.classify.epochs,
        word_ngrams: cfg.classify.word_ngrams,
        ..TrainParams::default()
    };
    let model = train_classifier(&train_docs, &vocab, &params, cfg.seed)
        .map_err(|e| CliError::Stage(e.to_string()))?;

    if test_idx.is_empty() {
        ctx.warn("holdout split left no test documents; metrics skipped".to_owned());
    } else {
        let predictions: Vec<String> = test_idx
            .iter()
            .map(|&i| model.predict(&labeled[i].doc, &vocab).label)
            .collect();
        let gold: Vec<String> = test_idx.iter().map(|&i| labeled[i].label.clone()).collect();
        let metrics = evaluate(&predictions, &gold, &rules.positive_label)
            .map_err(|e| CliError::Stage(e.to_string()))?;
        ctx.emit_bytes("classify/holdout_metrics.json", &to_json_pretty(&metrics)?)?;
    }

    ctx.emit_with("classify/model.json", |p| {
        model.save(p).map_err(|e| CliError::Stage(e.to_string()))
    })
}

fn load_vocab_artifact(path: &Path) -> Result<Vocabulary> {
    let raw = read_artifact_bytes(path)?;
    serde_json::from_slice(&raw)
        .map_err(|e| CliError::Input(format!("bad vocabulary {}: {e}", path.display())))
}

fn stage_classify_predict(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let threads_path = ctx.consume_artifact("ingest", "corpus/threads.jsonl")?;
    let vocab_path = ctx.consume_artifact("classify-train", "classify/vocab.json")?;
    let model_path = ctx.consume_artifact("classify-train", "classify/model.json")?;
    let corpus = load_corpus_artifact(&threads_path)?;
    let vocab = load_vocab_artifact(&vocab_path)?;
    let model =
        ClassifierModel::load(&model_path, &vocab).map_err(|e| CliError::Input(e.to_string()))?;
    let tok = tokenizer_config(cfg, ctx)?;

    let mut predictions = String::new();
    let mut positive_threads = Vec::new();
    for thread in &corpus.threads {
        let doc = tokenize_doc(&thread.thread_id, &thread.full_text(), &tok);
        let p = model.predict(&doc, &vocab);
        let flag = if p.oov { "oov" } else { "-" };
        predictions.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            p.label, thread.thread_id, p.probability, flag
        ));
        if p.label == cfg.classify.positive_label {
            positive_threads.push(thread.clone());
        }
    }
    if positive_threads.is_empty() {
        ctx.warn("no thread classified positive; downstream stages will have no data".to_owned());
    }
    ctx.emit_bytes("classify/predictions.tsv", predictions.as_bytes())?;
    let filtered = Corpus {
        threads: positive_threads,
    };
    ctx.emit_with("classify/positive_threads.jsonl", |p| {
        corpus::emit(&filtered, p).map_err(|e| CliError::Stage(e.to_string()))
    })
}

// ---------------------------------------------------------------------------
// weight
// ---------------------------------------------------------------------------

fn stage_weight(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let positives_path =
        ctx.consume_artifact("classify-predict", "classify/positive_threads.jsonl")?;
    let corpus = load_corpus_artifact(&positives_path)?;
    let tok = tokenizer_config(cfg, ctx)?;
    let docs = patient_documents(&corpus, cfg.weighting.doc_unit, &tok);
    if docs.is_empty() {
        return Err(CliError::Stage(
            "no patient documents in the positive threads".into(),
        ));
    }
    let vocab = build_vocabulary(&docs, cfg.weighting.min_count);
    if vocab.is_empty() {
        return Err(CliError::Stage(format!(
            "weighting vocabulary is empty at min_count {}; lower weighting.min_count",
            cfg.weighting.min_count
        )));
    }

    let counts = count_matrix(&docs, &vocab);
    let tfidf = tf_idf(&counts);
    let logent = log_entropy(&counts);
    let (tfidf_scaled, tfidf_max) = scale_to_unit_max(&tfidf);
    let (logent_scaled, logent_max) = scale_to_unit_max(&logent);
    let hybrid =
        hybrid_mean(&tfidf_scaled, &logent_scaled).map_err(|e| CliError::Stage(e.to_string()))?;

    let mut scaling = BTreeMap::new();
    scaling.insert("tfidf_max".to_owned(), tfidf_max);
    scaling.insert("log_entropy_max".to_owned(), logent_max);

    ctx.emit_bytes("weight/vocab.json", &to_json_pretty(&vocab)?)?;
    let doc_ids: String = docs.iter().map(|d| format!("{}\n", d.doc_id)).collect();
    ctx.emit_bytes("weight/doc_ids.txt", doc_ids.as_bytes())?;
    ctx.emit_with("weight/counts.txt", |p| {
        write_coordinate_file(p, &counts.to_weighted(), &BTreeMap::new())
            .map_err(|e| CliError::Stage(e.to_string()))
    })?;
    ctx.emit_with("weight/matrix.txt", |p| {
        write_coordinate_file(p, &hybrid, &scaling).map_err(|e| CliError::Stage(e.to_string()))
    })
}

// ---------------------------------------------------------------------------
// lda
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LdaSummary {
    num_topics: usize,
    iterations: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    count_scale: f64,
    map_stress: f64,
    prevalence: Vec<f64>,
}

fn stage_lda(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let matrix_path = ctx.consume_artifact("weight", "weight/matrix.txt")?;
    let vocab_path = ctx.consume_artifact("weight", "weight/vocab.json")?;
    let (matrix, _header) =
        read_coordinate_file(&matrix_path).map_err(|e| CliError::Input(e.to_string()))?;
    let vocab = load_vocab_artifact(&vocab_path)?;

    let params = LdaParams {
        num_topics: cfg.lda.topics,
        iterations: cfg.lda.iterations,
        alpha: cfg.lda.alpha.unwrap_or(50.0 / cfg.lda.topics as f64),
        beta: cfg.lda.beta,
        seed: cfg.seed,
        count_scale: cfg.lda.count_scale,
    };
    let model = train_lda(&matrix, &params).map_err(|e| CliError::Stage(e.to_string()))?;
    let lengths = pseudo_doc_lengths(&matrix, params.count_scale);
    let prevalence =
        topic_prevalence(&model, &lengths).map_err(|e| CliError::Stage(e.to_string()))?;
    let masses = pseudo_term_masses(&matrix, params.count_scale);
    let saliency =
        word_saliency(&model, &prevalence, &masses).map_err(|e| CliError::Stage(e.to_string()))?;
    let layout =
        topic_map_layout(&model, &prevalence).map_err(|e| CliError::Stage(e.to_string()))?;

    ctx.emit_with("lda/model.bin", |p| {
        phenotype::topics::write_model(p, &model).map_err(|e| CliError::Stage(e.to_string()))
    })?;

    let mut layout_csv = String::from("topic_id,x,y,radius,prevalence\n");
    for (k, pt) in layout.points.iter().enumerate() {
        layout_csv.push_str(&format!(
            "{k},{},{},{},{}\n",
            pt.x, pt.y, pt.radius, prevalence[k]
        ));
    }
    ctx.emit_bytes("lda/layout.csv", layout_csv.as_bytes())?;

    let mut ranked: Vec<usize> = (0..vocab.len()).collect();
    ranked.sort_by(|&a, &b| {
        saliency.saliency[b]
            .total_cmp(&saliency.saliency[a])
            .then_with(|| a.cmp(&b))
    });
    let mut saliency_csv = String::from("term,saliency,p_word\n");
    for w in ranked {
        saliency_csv.push_str(&format!(
            "{},{},{}\n",
            csv_field(vocab.term(w)),
            saliency.saliency[w],
            saliency.p_word[w]
        ));
    }
    ctx.emit_bytes("lda/saliency.csv", saliency_csv.as_bytes())?;

    let mut order: Vec<usize> = (0..model.num_topics).collect();
    order.sort_by(|&a, &b| {
        prevalence[b]
            .total_cmp(&prevalence[a])
            .then_with(|| a.cmp(&b))
    });
    let mut listing = String::new();
    for (rank, &k) in order.iter().enumerate() {
        let terms: Vec<String> = top_terms(&model, k, cfg.lda.top_terms)
            .map_err(|e| CliError::Stage(e.to_string()))?
            .into_iter()
            .map(|(w, _)| vocab.term(w).to_owned())
            .collect();
        listing.push_str(&format!(
            "topic {k} (rank {}, prevalence {:.4}): {}\n",
            rank + 1,
            prevalence[k],
            terms.join(", ")
        ));
    }
    ctx.emit_bytes("lda/topics.txt", listing.as_bytes())?;

    let summary = LdaSummary {
        num_topics: params.num_topics,
        iterations: params.iterations,
        alpha: params.alpha,
        beta: params.beta,
        seed: params.seed,
        count_scale: params.count_scale,
        map_stress: layout.stress,
        prevalence,
    };
    ctx.emit_bytes("lda/summary.json", &to_json_pretty(&summary)?)
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

fn stage_embed(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let threads_path = ctx.consume_artifact("ingest", "corpus/threads.jsonl")?;
    let corpus = load_corpus_artifact(&threads_path)?;
    let tok = tokenizer_config(cfg, ctx)?;
    let docs: Vec<TokenizedDoc> = corpus
        .threads
        .iter()
        .flat_map(|t| t.messages.iter())
        .filter(|m| {
            cfg.embed.include_doctor_messages
                || m.author_role == phenotype::corpus::AuthorRole::Patient
        })
        .map(|m| tokenize_doc(&format!("{}:{}", m.thread_id, m.position), &m.text, &tok))
        .collect();

    let params = CbowParams {
        dim: cfg.embed.dim,
        epochs: cfg.embed.epochs,
        window: cfg.embed.window,
        negatives: cfg.embed.negatives,
        min_count: cfg.embed.min_count,
        learning_rate: cfg.embed.learning_rate,
        seed: cfg.seed,
    };
    let space = train_cbow(&docs, &params).map_err(|e| CliError::Stage(e.to_string()))?;

    ctx.emit_with("embed/vectors.txt", |p| {
        save_vectors(&space, p).map_err(|e| CliError::Stage(e.to_string()))
    })?;
    ctx.emit_bytes("embed/summary.json", &to_json_pretty(&space.meta)?)
}

// ---------------------------------------------------------------------------
// refine / subtopics
// ---------------------------------------------------------------------------

fn topic_label(rt: &RefinedTopic) -> String {
    rt.label
        .clone()
        .unwrap_or_else(|| format!("TOPIC {}", rt.topic_id))
}

fn refined_listing(topics: &[RefinedTopic]) -> String {
    let mut out = String::new();
    for rt in topics {
        let words: Vec<&str> = rt
            .retained
            .iter()
            .map(|w| w.as_str())
            .chain(rt.added.iter().map(|(w, _)| w.as_str()))
            .collect();
        out.push_str(&format!("{}: {}\n", topic_label(rt), words.join(", ")));
    }
    out
}

fn stage_refine(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let model_path = ctx.consume_artifact("lda", "lda/model.bin")?;
    let summary_path = ctx.consume_artifact("lda", "lda/summary.json")?;
    let vocab_path = ctx.consume_artifact("weight", "weight/vocab.json")?;
    let vectors_path = ctx.consume_artifact("embed", "embed/vectors.txt")?;

    let model = read_model(&model_path).map_err(|e| CliError::Input(e.to_string()))?;
    let summary: LdaSummary = serde_json::from_slice(&read_artifact_bytes(&summary_path)?)
        .map_err(|e| CliError::Input(format!("bad lda summary: {e}")))?;
    let vocab = load_vocab_artifact(&vocab_path)?;
    let space = load_vectors(&vectors_path).map_err(|e| CliError::Input(e.to_string()))?;

    let refined = refine_all(
        &model,
        &summary.prevalence,
        &vocab,
        cfg.refine.top_m,
        &space,
        cfg.refine.prune_fraction,
        cfg.refine.expand_threshold,
        cfg.refine.relevance,
    )
    .map_err(|e| CliError::Stage(e.to_string()))?;
    for rt in &refined {
        for w in &rt.provenance.warnings {
            ctx.warn(format!("topic {}: {w}", rt.topic_id));
        }
    }

    ctx.emit_bytes("refine/topics.json", &to_json_pretty(&refined)?)?;
    ctx.emit_bytes("refine/topics.txt", refined_listing(&refined).as_bytes())
}

#[derive(Deserialize)]
struct SeedClusterSpec {
    label: String,
    seeds: Vec<String>,
}

fn cluster_listing(clusters: &[SeedCluster]) -> String {
    let mut out = String::new();
    for c in clusters {
        let words: Vec<&str> = c
            .seeds
            .iter()
            .map(|s| s.as_str())
            .chain(c.expanded.iter().map(|(w, _)| w.as_str()))
            .collect();
        out.push_str(&format!("{}: {}\n", c.label, words.join(", ")));
    }
    out
}

fn stage_subtopics(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let seeds_path = cfg
        .seed_clusters
        .as_ref()
        .ok_or_else(|| CliError::Config("subtopics requires seed_clusters in the config".into()))?;
    let seeds_path = ctx.consume_external(seeds_path)?;
    let vectors_path = ctx.consume_artifact("embed", "embed/vectors.txt")?;

    let specs: Vec<SeedClusterSpec> = serde_json::from_slice(&read_artifact_bytes(&seeds_path)?)
        .map_err(|e| CliError::Input(format!("bad seed clusters {}: {e}", seeds_path.display())))?;
    if specs.is_empty() {
        return Err(CliError::Input("seed cluster file is empty".into()));
    }
    let space = load_vectors(&vectors_path).map_err(|e| CliError::Input(e.to_string()))?;

    let mut clusters = Vec::with_capacity(specs.len());
    for spec in &specs {
        let cluster =
            expand_seed_cluster(&spec.label, &spec.seeds, &space, cfg.subtopics.threshold)
                .map_err(|e| CliError::Stage(format!("cluster {:?}: {e}", spec.label)))?;
        let missing: Vec<&String> = spec.seeds.iter().filter(|s| !space.contains(s)).collect();
        if !missing.is_empty() {
            ctx.warn(format!(
                "cluster {:?}: seeds missing from the embedding vocabulary: {missing:?}",
                spec.label
            ));
        }
        clusters.push(cluster);
    }

    ctx.emit_bytes("subtopics/clusters.json", &to_json_pretty(&clusters)?)?;
    ctx.emit_bytes(
        "subtopics/clusters.txt",
        cluster_listing(&clusters).as_bytes(),
    )
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn kinship_pack(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<KinshipConfig> {
    let raw = match &cfg.kinship_pack {
        Some(path) => {
            let path = ctx.consume_external(path)?;
            String::from_utf8(read_artifact_bytes(&path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => match cfg.kinship_language.as_str() {
            "en" => KINSHIP_EN.to_owned(),
            "it" => KINSHIP_IT.to_owned(),
            other => {
                return Err(CliError::Config(format!(
                    "no built-in kinship pack for language {other:?}; supply kinship_pack"
                )))
            }
        },
    };
    let mut pack: KinshipConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Input(format!("bad kinship pack: {e}")))?;
    pack.window = cfg.analytics.kinship_window;
    Ok(pack)
}

#[derive(Serialize)]
struct AnalyzeMeta {
    topic_presence_rule: String,
    subtopic_presence_rule: String,
    theta_threshold: f64,
    npmi_floor: f64,
    kinship_window: usize,
    seed: u64,
    undefined_npmi_cells: Vec<(String, String)>,
    input_hashes: BTreeMap<String, String>,
}

fn npmi_csv(m: &phenotype::analytics::NpmiMatrix, floor: f64) -> (String, Vec<(String, String)>) {
    let mut csv = String::from("subtopic");
    for c in &m.col_ids {
        csv.push(',');
        csv.push_str(&csv_field(c));
    }
    csv.push('\n');
    let mut undefined = Vec::new();
    for (i, row_id) in m.row_ids.iter().enumerate() {
        csv.push_str(&csv_field(row_id));
        for (j, cell) in m.entries[i].iter().enumerate() {
            match cell {
                Some(v) => csv.push_str(&format!(",{v}")),
                None => {
                    csv.push_str(&format!(",{floor}"));
                    undefined.push((row_id.clone(), m.col_ids[j].clone()));
                }
            }
        }
        csv.push('\n');
    }
    (csv, undefined)
}

fn frequency_csv(header: &str, ids: &[String], fractions: &[f64]) -> String {
    let mut csv = format!("{header},fraction\n");
    for (id, f) in ids.iter().zip(fractions) {
        csv.push_str(&format!("{},{f}\n", csv_field(id)));
    }
    csv
}

fn cross_tab_csv(tab: &CrossTab) -> String {
    let mut csv = String::from("group");
    for c in &tab.column_ids {
        csv.push(',');
        csv.push_str(&csv_field(c));
    }
    csv.push('\n');
    for (group, row) in &tab.groups {
        csv.push_str(&csv_field(group));
        match row {
            Some(values) => {
                for v in values {
                    csv.push_str(&format!(",{v}"));
                }
            }
            None => {
                for _ in &tab.column_ids {
                    csv.push_str(",NA");
                }
            }
        }
        csv.push('\n');
    }
    csv
}

fn segments_csv(records: &[SegmentRecord]) -> String {
    let mut csv = String::from("message_id,keyword,age_group,gender\n");
    for r in records {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&r.message_id),
            csv_field(&r.matched_keyword),
            r.age_group.as_str(),
            r.gender.as_str()
        ));
    }
    csv
}

fn stage_analyze(cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let positives_path =
        ctx.consume_artifact("classify-predict", "classify/positive_threads.jsonl")?;
    let doc_ids_path = ctx.consume_artifact("weight", "weight/doc_ids.txt")?;
    let model_path = ctx.consume_artifact("lda", "lda/model.bin")?;
    let clusters_path = ctx.consume_artifact("subtopics", "subtopics/clusters.json")?;

    let corpus = load_corpus_artifact(&positives_path)?;
    let tok = tokenizer_config(cfg, ctx)?;
    let docs = patient_documents(&corpus, cfg.weighting.doc_unit, &tok);
    let doc_ids: Vec<String> = String::from_utf8(read_artifact_bytes(&doc_ids_path)?)
        .map_err(|e| CliError::Input(format!("doc_ids.txt: {e}")))?
        .lines()
        .map(str::to_owned)
        .collect();
    let current_ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    if current_ids != doc_ids {
        return Err(CliError::Input(
            "document ids no longer match weight/doc_ids.txt; rerun 'weight' and 'lda'".into(),
        ));
    }

    let model: TopicModel = read_model(&model_path).map_err(|e| CliError::Input(e.to_string()))?;
    if model.num_docs != docs.len() {
        return Err(CliError::Input(
            "topic model rows do not match the document set; rerun 'lda'".into(),
        ));
    }
    let clusters: Vec<SeedCluster> = serde_json::from_slice(&read_artifact_bytes(&clusters_path)?)
        .map_err(|e| CliError::Input(format!("bad clusters artifact: {e}")))?;

    // main-topic presence from theta
    let topic_ids: Vec<String> = (0..model.num_topics)
        .map(|k| format!("topic_{k}"))
        .collect();
    let topic_presence = presence_from_theta(
        &current_ids,
        &model.theta,
        &topic_ids,
        cfg.analytics.theta_threshold,
    )
    .map_err(|e| CliError::Stage(e.to_string()))?;

    // sub-topic presence from cluster word lists (seeds plus expansions)
    let lists: Vec<(String, Vec<String>)> = clusters
        .iter()
        .map(|c| {
            let words: Vec<String> = c
                .seeds
                .iter()
                .cloned()
                .chain(c.expanded.iter().map(|(w, _)| w.clone()))
                .collect();
            (c.label.clone(), words)
        })
        .collect();
    let subtopic_presence = presence_from_word_lists(&docs, &lists, &tok);

    let topic_freq =
        frequency_distribution(&topic_presence).map_err(|e| CliError::Stage(e.to_string()))?;
    let subtopic_freq =
        frequency_distribution(&subtopic_presence).map_err(|e| CliError::Stage(e.to_string()))?;
    ctx.emit_bytes(
        "analyze/topic_frequency.csv",
        frequency_csv("topic", &topic_ids, &topic_freq).as_bytes(),
    )?;
    ctx.emit_bytes(
        "analyze/subtopic_frequency.csv",
        frequency_csv(
            "subtopic",
            &subtopic_presence.column_ids.clone(),
            &subtopic_freq,
        )
        .as_bytes(),
    )?;

    // NPMI of sub-topics against main topics over a combined matrix
    let combined_columns: Vec<String> = subtopic_presence
        .column_ids
        .iter()
        .cloned()
        .chain(topic_ids.iter().cloned())
        .collect();
    let combined_rows: Vec<Vec<bool>> = (0..docs.len())
        .map(|r| {
            subtopic_presence
                .row(r)
                .iter()
                .copied()
                .chain(topic_presence.row(r).iter().copied())
                .collect()
        })
        .collect();
    let combined = PresenceMatrix::from_rows(
        current_ids.clone(),
        combined_columns,
        format!(
            "subtopics: {}; topics: {}",
            subtopic_presence.rule, topic_presence.rule
        ),
        combined_rows,
    );
    let n_sub = subtopic_presence.column_ids.len();
    let sub_cols: Vec<usize> = (0..n_sub).collect();
    let topic_cols: Vec<usize> = (n_sub..n_sub + model.num_topics).collect();
    let npmi_matrix =
        npmi(&combined, &sub_cols, &topic_cols).map_err(|e| CliError::Stage(e.to_string()))?;
    let (npmi_body, undefined_cells) = npmi_csv(&npmi_matrix, cfg.analytics.npmi_floor);
    ctx.emit_bytes("analyze/npmi.csv", npmi_body.as_bytes())?;

    // kinship segmentation over the same documents
    let pack = kinship_pack(cfg, ctx)?;
    let records = segment_by_kinship(&docs, &pack, &tok);
    ctx.emit_bytes("analyze/segments.csv", segments_csv(&records).as_bytes())?;

    let mut distribution_csv = String::from("dimension,group,fraction\n");
    if records.is_empty() {
        ctx.warn("no kinship matches; segmentation outputs are empty".to_owned());
    } else {
        let dist = segment_distribution(&records).map_err(|e| CliError::Stage(e.to_string()))?;
        for (group, f) in &dist.age_fractions {
            distribution_csv.push_str(&format!("age,{},{f}\n", group.as_str()));
        }
        for (group, f) in &dist.gender_fractions {
            distribution_csv.push_str(&format!("gender,{},{f}\n", group.as_str()));
        }
        distribution_csv.push_str(&format!("gender,unknown_count,{}\n", dist.unknown_gender));
    }
    ctx.emit_bytes(
        "analyze/segment_distribution.csv",
        distribution_csv.as_bytes(),
    )?;

    for (axis, rel) in [
        (CrossTabAxis::Age, "analyze/crosstab_age.csv"),
        (CrossTabAxis::Gender, "analyze/crosstab_gender.csv"),
    ] {
        let tab = cross_tab(&records, &subtopic_presence, axis)
            .map_err(|e| CliError::Stage(e.to_string()))?;
        ctx.emit_bytes(rel, cross_tab_csv(&tab).as_bytes())?;
    }

    let meta = AnalyzeMeta {
        topic_presence_rule: topic_presence.rule.clone(),
        subtopic_presence_rule: subtopic_presence.rule.clone(),
        theta_threshold: cfg.analytics.theta_threshold,
        npmi_floor: cfg.analytics.npmi_floor,
        kinship_window: pack.window,
        seed: cfg.seed,
        undefined_npmi_cells: undefined_cells,
        input_hashes: ctx.recorded_inputs().clone(),
    };
    ctx.emit_bytes("analyze/meta.json", &to_json_pretty(&meta)?)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn stage_report(_cfg: &RunConfig, ctx: &mut StageCtx) -> Result<()> {
    let copies = [
        (
            "analyze",
            "analyze/topic_frequency.csv",
            "report/topic_frequency.csv",
        ),
        (
            "analyze",
            "analyze/subtopic_frequency.csv",
            "report/subtopic_frequency.csv",
        ),
        ("analyze", "analyze/npmi.csv", "report/npmi.csv"),
        ("analyze", "analyze/segments.csv", "report/segments.csv"),
        (
            "analyze",
            "analyze/segment_distribution.csv",
            "report/segment_distribution.csv",
        ),
        (
            "analyze",
            "analyze/crosstab_age.csv",
            "report/crosstab_age.csv",
        ),
        (
            "analyze",
            "analyze/crosstab_gender.csv",
            "report/crosstab_gender.csv",
        ),
        ("analyze", "analyze/meta.json", "report/meta.json"),
        ("lda", "lda/layout.csv", "report/topic_map.csv"),
    ];
    for (producer, src, dst) in copies {
        let path = ctx.consume_artifact(producer, src)?;
        let bytes = read_artifact_bytes(&path)?;
        ctx.emit_bytes(dst, &bytes)?;
    }

    let topics_path = ctx.consume_artifact("refine", "refine/topics.json")?;
    let refined: Vec<RefinedTopic> = serde_json::from_slice(&read_artifact_bytes(&topics_path)?)
        .map_err(|e| CliError::Input(format!("bad refined topics: {e}")))?;
    ctx.emit_bytes("report/topics.txt", refined_listing(&refined).as_bytes())?;

    let clusters_path = ctx.consume_artifact("subtopics", "subtopics/clusters.json")?;
    let clusters: Vec<SeedCluster> = serde_json::from_slice(&read_artifact_bytes(&clusters_path)?)
        .map_err(|e| CliError::Input(format!("bad clusters artifact: {e}")))?;
    ctx.emit_bytes(
        "report/subtopics.txt",
        cluster_listing(&clusters).as_bytes(),
    )?;

    let summary_path = ctx.consume_artifact("lda", "lda/summary.json")?;
    let summary: LdaSummary = serde_json::from_slice(&read_artifact_bytes(&summary_path)?)
        .map_err(|e| CliError::Input(format!("bad lda summary: {e}")))?;
    let stats_path = ctx.consume_artifact("ingest", "corpus/stats.json")?;
    let stats: serde_json::Value = serde_json::from_slice(&read_artifact_bytes(&stats_path)?)
        .map_err(|e| CliError::Input(format!("bad corpus stats: {e}")))?;

    let mut text = String::new();
    text.push_str("phenotype run report\n");
    text.push_str("====================\n\n");
    text.push_str(&format!(
        "corpus: {} threads, {} messages ({} from patients)\n",
        stats["threads"], stats["messages"], stats["patient_messages"]
    ));
    text.push_str(&format!(
        "topics: {} (alpha {:.4}, beta {}, {} sweeps, seed {})\n",
        summary.num_topics, summary.alpha, summary.beta, summary.iterations, summary.seed
    ));
    text.push_str(&format!("topic map stress: {:.6}\n\n", summary.map_stress));
    text.push_str("topics by prevalence\n");
    text.push_str("--------------------\n");
    for rt in &refined {
        let preview: Vec<&str> = rt
            .retained
            .iter()
            .map(|w| w.as_str())
            .chain(rt.added.iter().map(|(w, _)| w.as_str()))
            .take(10)
            .collect();
        text.push_str(&format!(
            "{} (prevalence {:.4}): {}\n",
            topic_label(rt),
            summary.prevalence[rt.topic_id],
            preview.join(", ")
        ));
    }
    text.push_str("\nsub-topics\n");
    text.push_str("----------\n");
    for c in &clusters {
        text.push_str(&format!(
            "{}: {} seed words, {} expansion words\n",
            c.label,
            c.seeds.len(),
            c.expanded.len()
        ));
    }
    ctx.emit_bytes("report/summary.txt", text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fields_quote_only_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("with,comma"), "\"with,comma\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn builtin_kinship_packs_parse() {
        for raw in [KINSHIP_EN, KINSHIP_IT] {
            let pack: KinshipConfig = serde_json::from_str(raw).unwrap();
            assert!(!pack.entries.is_empty());
            assert!(!pack.possessives.is_empty());
        }
    }
}
