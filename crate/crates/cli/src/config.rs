//! Run configuration: one JSON file with defaults for everything except the
//! corpus path. Paths inside the file resolve relative to the file's
//! directory so a config and its data can move together.

use std::path::{Path, PathBuf};

use phenotype::refine::RelevanceMode;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSONL corpus of threads. The only field without a usable default.
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Abort ingestion on the first malformed line.
    pub strict: bool,
    pub stoplist: Option<PathBuf>,
    pub key_phrases: Option<PathBuf>,
    /// Kinship language pack file; the built-in pack for
    /// `kinship_language` applies when unset.
    pub kinship_pack: Option<PathBuf>,
    pub kinship_language: String,
    pub seed_clusters: Option<PathBuf>,
    pub tokenizer: TokenizerCfg,
    pub classify: ClassifyCfg,
    pub weighting: WeightingCfg,
    pub lda: LdaCfg,
    pub embed: EmbedCfg,
    pub refine: RefineCfg,
    pub subtopics: SubtopicsCfg,
    pub analytics: AnalyticsCfg,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            out_dir: PathBuf::from("out"),
            seed: 42,
            strict: false,
            stoplist: None,
            key_phrases: None,
            kinship_pack: None,
            kinship_language: "en".into(),
            seed_clusters: None,
            tokenizer: TokenizerCfg::default(),
            classify: ClassifyCfg::default(),
            weighting: WeightingCfg::default(),
            lda: LdaCfg::default(),
            embed: EmbedCfg::default(),
            refine: RefineCfg::default(),
            subtopics: SubtopicsCfg::default(),
            analytics: AnalyticsCfg::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerCfg {
    pub case_fold: bool,
}

impl Default for TokenizerCfg {
    fn default() -> Self {
        TokenizerCfg { case_fold: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyCfg {
    pub positive_prefixes: Vec<String>,
    pub min_prefix_hits: usize,
    pub exclusion_dictionary: Option<PathBuf>,
    pub positive_label: String,
    pub negative_label: String,
    pub max_negatives: Option<usize>,
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub word_ngrams: usize,
    pub min_count: u64,
    pub holdout_fraction: f64,
}

impl Default for ClassifyCfg {
    fn default() -> Self {
        ClassifyCfg {
            positive_prefixes: vec!["diab".into(), "insulin".into()],
            min_prefix_hits: 3,
            exclusion_dictionary: None,
            positive_label: "DIABETES".into(),
            negative_label: "NO".into(),
            max_negatives: None,
            dim: 50,
            learning_rate: 0.1,
            epochs: 5,
            word_ngrams: 1,
            min_count: 1,
            holdout_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocUnit {
    /// One document per patient message (default).
    Message,
    /// One document per thread, all messages concatenated.
    Thread,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingCfg {
    pub min_count: u64,
    pub doc_unit: DocUnit,
}

impl Default for WeightingCfg {
    fn default() -> Self {
        WeightingCfg {
            min_count: 5,
            doc_unit: DocUnit::Message,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaCfg {
    pub topics: usize,
    pub iterations: usize,
    /// Defaults to 50/K when unset.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub count_scale: f64,
    /// Terms listed per topic in exports.
    pub top_terms: usize,
}

impl Default for LdaCfg {
    fn default() -> Self {
        LdaCfg {
            topics: 14,
            iterations: 500,
            alpha: None,
            beta: 0.01,
            count_scale: 10.0,
            top_terms: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedCfg {
    pub dim: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    /// Train on doctor messages too; the embedding reads the whole corpus
    /// either way, this only controls author filtering.
    pub include_doctor_messages: bool,
}

impl Default for EmbedCfg {
    fn default() -> Self {
        EmbedCfg {
            dim: 100,
            epochs: 100,
            window: 5,
            negatives: 5,
            min_count: 100,
            learning_rate: 0.025,
            include_doctor_messages: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineCfg {
    pub top_m: usize,
    pub prune_fraction: f64,
    pub expand_threshold: f64,
    pub relevance: RelevanceMode,
}

impl Default for RefineCfg {
    fn default() -> Self {
        RefineCfg {
            top_m: 50,
            prune_fraction: 0.30,
            expand_threshold: 0.60,
            relevance: RelevanceMode::CentroidCosine,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubtopicsCfg {
    pub threshold: f64,
}

impl Default for SubtopicsCfg {
    fn default() -> Self {
        SubtopicsCfg { threshold: 0.80 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsCfg {
    /// Mixture weight at which a message "has" a main topic.
    pub theta_threshold: f64,
    pub kinship_window: usize,
    /// Export value for undefined (never co-occurring) NPMI cells.
    pub npmi_floor: f64,
}

impl Default for AnalyticsCfg {
    fn default() -> Self {
        AnalyticsCfg {
            theta_threshold: 0.1,
            kinship_window: 50,
            npmi_floor: -1.0,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.as_os_str().is_empty() || p.is_absolute() {
        return;
    }
    *p = base.join(&p);
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;

    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_owned();
    resolve(&base, &mut cfg.corpus);
    resolve(&base, &mut cfg.out_dir);
    for opt in [
        &mut cfg.stoplist,
        &mut cfg.key_phrases,
        &mut cfg.kinship_pack,
        &mut cfg.seed_clusters,
        &mut cfg.classify.exclusion_dictionary,
    ]
    .into_iter()
    .flatten()
    {
        resolve(&base, opt);
    }

    // the output directory is the one setting with an environment override:
    // PHENOTYPE_OUT, below the --out flag in precedence
    if let Ok(out) = std::env::var("PHENOTYPE_OUT") {
        if !out.is_empty() {
            cfg.out_dir = PathBuf::from(out);
        }
    }
    if let Some(out) = &overrides.out_dir {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if overrides.strict {
        cfg.strict = true;
    }

    if cfg.corpus.as_os_str().is_empty() {
        return Err(CliError::Config("corpus path is not set".into()));
    }
    if cfg.lda.topics == 0 {
        return Err(CliError::Config("lda.topics must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.refine.prune_fraction) {
        return Err(CliError::Config(
            "refine.prune_fraction must lie in [0, 1]".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.classify.holdout_fraction) {
        return Err(CliError::Config(
            "classify.holdout_fraction must lie in [0, 1)".into(),
        ));
    }
    for (name, value) in [
        ("classify.min_count", cfg.classify.min_count),
        ("weighting.min_count", cfg.weighting.min_count),
        ("embed.min_count", cfg.embed.min_count),
    ] {
        if value == 0 {
            return Err(CliError::Config(format!("{name} must be at least 1")));
        }
    }
    for (name, value) in [
        ("classify.dim", cfg.classify.dim),
        ("embed.dim", cfg.embed.dim),
    ] {
        if value == 0 {
            return Err(CliError::Config(format!("{name} must be at least 1")));
        }
    }
    if cfg.lda.count_scale <= 0.0 || !cfg.lda.count_scale.is_finite() {
        return Err(CliError::Config(
            "lda.count_scale must be a positive number".into(),
        ));
    }
    Ok(cfg)
}

/// Canonical serialized form, used for the output-directory copy and the
/// config hash.
pub fn canonical_json(cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}
