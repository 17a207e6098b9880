//! Synthetic demo corpus shared by the integration and acceptance tests:
//! 200 forum threads with planted topic families, seeded weak-label markers,
//! and kinship openers at controlled positions. Deterministic for a fixed
//! seed so pipeline runs can be compared byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GLYCEMIA: &[&str] = &[
    "glycemia",
    "glucose",
    "sugar",
    "hemoglobin",
    "fasting",
    "basal",
    "hyperglycemia",
    "hypoglycemia",
    "glycated",
    "curve",
];
const DIET: &[&str] = &[
    "diet",
    "food",
    "meal",
    "carbohydrate",
    "bread",
    "fruit",
    "vegetable",
    "breakfast",
    "dinner",
    "hunger",
];
const TESTS: &[&str] = &[
    "cholesterol",
    "triglycerides",
    "blood",
    "urine",
    "creatinine",
    "analysis",
    "values",
    "test",
    "laboratory",
    "report",
];
const EYES: &[&str] = &[
    "eye",
    "retina",
    "vision",
    "blurred",
    "sight",
    "laser",
    "retinopathy",
    "glasses",
    "focus",
    "shadow",
];
const HEART: &[&str] = &[
    "heart",
    "pressure",
    "tachycardia",
    "cardiology",
    "artery",
    "hypertension",
    "chest",
    "beat",
    "stroke",
    "palpitations",
];
const NERVES: &[&str] = &[
    "neuropathy",
    "tingling",
    "leg",
    "foot",
    "nerve",
    "pain",
    "numbness",
    "limb",
    "burning",
    "ankle",
];
const FEELINGS: &[&str] = &[
    "fear",
    "anxiety",
    "stress",
    "worry",
    "sadness",
    "anger",
    "depression",
    "panic",
    "nervous",
    "mood",
];
const SLEEP: &[&str] = &[
    "tired",
    "sleep",
    "fatigue",
    "exhausted",
    "drowsy",
    "weak",
    "weary",
    "rest",
];
const KIDNEY: &[&str] = &[
    "kidney",
    "renal",
    "nephropathy",
    "microalbuminuria",
    "proteinuria",
    "filtration",
    "dialysis",
    "bladder",
];
const THIRST: &[&str] = &[
    "thirst",
    "water",
    "polyuria",
    "urination",
    "pee",
    "nocturia",
    "polydipsia",
    "drink",
];
const ORTHO: &[&str] = &[
    "knee",
    "shoulder",
    "fracture",
    "orthopedics",
    "cartilage",
    "sprain",
    "joint",
    "hip",
];
const SKIN: &[&str] = &[
    "skin",
    "rash",
    "dermatology",
    "itch",
    "eczema",
    "acne",
    "spot",
    "cream",
];
const TEETH: &[&str] = &[
    "tooth", "dentist", "cavity", "gum", "enamel", "molar", "filling", "plaque",
];
const FILLER: &[&str] = &[
    "the", "and", "a", "of", "in", "to", "for", "on", "with", "have", "since", "after", "when",
    "advice", "thanks", "months", "weeks", "morning", "evening", "doctor",
];
const MARKERS: &[&str] = &["diabetes", "diabetic", "insulin"];
const KIN: &[&str] = &[
    "mother",
    "father",
    "grandmother",
    "grandfather",
    "husband",
    "wife",
    "son",
    "daughter",
    "aunt",
    "uncle",
];

const POSITIVE_POOLS: &[&[&str]] = &[
    GLYCEMIA, DIET, TESTS, EYES, HEART, NERVES, FEELINGS, SLEEP, KIDNEY, THIRST,
];
const NEGATIVE_POOLS: &[&[&str]] = &[ORTHO, SKIN, TEETH, TESTS, FEELINGS];
const SOURCES: &[&str] = &["forum-alpha", "forum-beta", "forum-gamma"];

fn sample<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn sentenceize(words: &[String]) -> String {
    let mut text = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        if i == 0 {
            let mut chars = w.chars();
            if let Some(c) = chars.next() {
                text.extend(c.to_uppercase());
                text.push_str(chars.as_str());
            }
        } else {
            text.push_str(w);
        }
    }
    text.push('.');
    text
}

fn message_words(
    rng: &mut ChaCha8Rng,
    pools: &[&[&str]],
    len: usize,
    opener: Option<&str>,
    markers: usize,
) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    if let Some(kin) = opener {
        for w in ["my", kin, "has", "diabetes", "and"] {
            words.push(w.to_owned());
        }
    }
    while words.len() < len {
        let w = if rng.gen_bool(0.25) {
            sample(rng, FILLER)
        } else {
            let pool = pools[rng.gen_range(0..pools.len())];
            sample(rng, pool)
        };
        words.push(w.to_owned());
    }
    for _ in 0..markers {
        let pos = rng.gen_range(0..=words.len());
        words.insert(pos, sample(rng, MARKERS).to_owned());
    }
    words
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One thread as a JSONL line.
fn thread_line(
    id: &str,
    source: &str,
    category: Option<&str>,
    created: &str,
    messages: &[(u32, &str, String)],
) -> String {
    let mut line = format!(
        "{{\"thread_id\":\"{id}\",\"source\":\"{source}\",\"category\":{},\"created_at\":\"{created}\",\"messages\":[",
        match category {
            Some(c) => format!("\"{c}\""),
            None => "null".to_owned(),
        }
    );
    for (i, (pos, role, text)) in messages.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(
            line,
            "{{\"position\":{pos},\"author_role\":\"{role}\",\"text\":\"{}\"}}",
            json_escape(text)
        );
    }
    line.push_str("]}");
    line
}

/// Deterministic 200-thread demo corpus: 80 threads about the planted
/// "positive" condition, 105 clear negatives spread over other categories,
/// and 15 borderline threads with too few marker tokens to be labeled.
pub fn demo_corpus_jsonl(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();

    for t in 0..200 {
        let positive = t % 5 < 2; // 80 threads
        let borderline = t % 5 == 2 && t % 3 == 0; // inside the negative range
        let id = format!("t{t:04}");
        let source = SOURCES[t % SOURCES.len()];
        let created = format!(
            "20{:02}-{:02}-{:02}",
            10 + rng.gen_range(0..9),
            1 + rng.gen_range(0..12),
            1 + rng.gen_range(0..28)
        );

        let (category, pools): (Option<&str>, Vec<&[&str]>) = if positive {
            let mut pools: Vec<&[&str]> = Vec::new();
            while pools.len() < 3 {
                let p = POSITIVE_POOLS[rng.gen_range(0..POSITIVE_POOLS.len())];
                if !pools.contains(&p) {
                    pools.push(p);
                }
            }
            let cat = if rng.gen_bool(0.85) {
                Some("diabetology")
            } else {
                None
            };
            (cat, pools)
        } else {
            let cat = Some(match t % 4 {
                0 => "orthopedics",
                1 => "dermatology",
                2 => "dentistry",
                _ => "general",
            });
            let mut pools: Vec<&[&str]> = Vec::new();
            while pools.len() < 2 {
                let p = NEGATIVE_POOLS[rng.gen_range(0..NEGATIVE_POOLS.len())];
                if !pools.contains(&p) {
                    pools.push(p);
                }
            }
            (cat, pools)
        };

        let n_messages = 2 + rng.gen_range(0..3);
        let mut messages: Vec<(u32, &str, String)> = Vec::new();
        for m in 0..n_messages {
            let role = if m == 0 {
                "patient"
            } else if m % 2 == 1 && rng.gen_bool(0.7) {
                "doctor"
            } else {
                "patient"
            };
            let opener = if m == 0 && positive && rng.gen_bool(0.4) {
                Some(sample(&mut rng, KIN))
            } else {
                None
            };
            let markers = if m == 0 && positive {
                3 + rng.gen_range(0..3)
            } else if m == 0 && borderline {
                1
            } else {
                0
            };
            let len = 15 + rng.gen_range(0..18);
            let words = message_words(&mut rng, &pools, len, opener, markers);
            messages.push((m as u32, role, sentenceize(&words)));
        }
        lines.push(thread_line(&id, source, category, &created, &messages));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

pub const DEMO_STOPLIST: &str = "the\nand\na\nof\nin\nto\nfor\non\nwith\n";

pub const DEMO_SEED_CLUSTERS: &str = r#"[
  {"label": "NEGATIVE-FEELINGS", "seeds": ["fear", "anxiety", "stress", "worry", "sadness"]},
  {"label": "DROWSINESS-TIREDNESS", "seeds": ["tired", "sleep", "fatigue", "exhausted"]},
  {"label": "EYE-PROBLEMS", "seeds": ["eye", "retina", "vision", "blurred"]},
  {"label": "CARDIOVASCULAR", "seeds": ["heart", "pressure", "tachycardia", "hypertension"]},
  {"label": "THIRST-URINE", "seeds": ["thirst", "water", "polyuria", "urination"]}
]
"#;

/// Demo run configuration; paths are relative to the config file.
pub fn demo_config_json(out_dir: &str) -> String {
    format!(
        r#"{{
  "corpus": "threads.jsonl",
  "out_dir": "{out_dir}",
  "seed": 42,
  "stoplist": "stoplist.txt",
  "seed_clusters": "seed_clusters.json",
  "kinship_language": "en",
  "classify": {{"dim": 32, "epochs": 8, "min_count": 1}},
  "weighting": {{"min_count": 3}},
  "lda": {{"topics": 14, "iterations": 150, "count_scale": 10.0, "top_terms": 12}},
  "embed": {{"dim": 24, "epochs": 25, "window": 5, "negatives": 5, "min_count": 5, "learning_rate": 0.05}},
  "refine": {{"top_m": 20, "prune_fraction": 0.3, "expand_threshold": 0.6}},
  "subtopics": {{"threshold": 0.8}},
  "analytics": {{"theta_threshold": 0.1, "kinship_window": 50}}
}}
"#
    )
}

/// Write the demo fixture (corpus, stoplist, seed clusters, config) into
/// `dir` and return the config path. `out_dir` lands in the config verbatim.
pub fn write_demo_fixture(dir: &Path, out_dir: &str) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("threads.jsonl"), demo_corpus_jsonl(7)).unwrap();
    std::fs::write(dir.join("stoplist.txt"), DEMO_STOPLIST).unwrap();
    std::fs::write(dir.join("seed_clusters.json"), DEMO_SEED_CLUSTERS).unwrap();
    let config = dir.join("config.json");
    std::fs::write(&config, demo_config_json(out_dir)).unwrap();
    config
}

/// Run one pipeline stage through the binary; returns (exit code, stderr).
pub fn run_stage(stage: &str, config: &Path, out_dir: &Path) -> (i32, String) {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_phenotype"))
        .arg(stage)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out_dir)
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

pub const ALL_STAGES: &[&str] = &[
    "ingest",
    "classify-train",
    "classify-predict",
    "weight",
    "lda",
    "embed",
    "refine",
    "subtopics",
    "analyze",
    "report",
];
