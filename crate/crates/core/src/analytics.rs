//! Corpus-level statistics over topics and sub-topics: boolean presence
//! matrices with an explicit rule, frequency distributions, NPMI
//! co-occurrence, and kinship-based age/gender segmentation of messages.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, TokenizedDoc, TokenizerConfig};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("presence matrix has no rows")]
    EmptyPresence,
    #[error("column index {column} out of range for {columns} columns")]
    BadColumn { column: usize, columns: usize },
    #[error("message {0:?} is not a presence-matrix row")]
    UnknownMessage(String),
    #[error("{what} length {got} does not match {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no segment records")]
    NoRecords,
}

// ---------------------------------------------------------------------------
// Presence
// ---------------------------------------------------------------------------

/// Boolean message × column matrix; `rule` records how presence was decided
/// so every export can state its own provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceMatrix {
    pub message_ids: Vec<String>,
    pub column_ids: Vec<String>,
    pub rule: String,
    rows: Vec<Vec<bool>>,
}

impl PresenceMatrix {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.column_ids.len()
    }

    pub fn entry(&self, row: usize, column: usize) -> bool {
        self.rows[row][column]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.rows[row]
    }

    /// Ad-hoc construction for callers that computed presence themselves.
    pub fn from_rows(
        message_ids: Vec<String>,
        column_ids: Vec<String>,
        rule: String,
        rows: Vec<Vec<bool>>,
    ) -> Self {
        assert_eq!(message_ids.len(), rows.len(), "one row per message");
        for r in &rows {
            assert_eq!(r.len(), column_ids.len(), "one cell per column");
        }
        PresenceMatrix {
            message_ids,
            column_ids,
            rule,
            rows,
        }
    }
}

/// Main-topic presence: a message has a topic when its mixture weight
/// reaches `tau`.
pub fn presence_from_theta(
    message_ids: &[String],
    theta_rows: &[Vec<f64>],
    column_ids: &[String],
    tau: f64,
) -> Result<PresenceMatrix, AnalyticsError> {
    if message_ids.len() != theta_rows.len() {
        return Err(AnalyticsError::LengthMismatch {
            what: "theta rows",
            expected: message_ids.len(),
            got: theta_rows.len(),
        });
    }
    let rows: Vec<Vec<bool>> = theta_rows
        .iter()
        .map(|row| {
            if row.len() != column_ids.len() {
                return Err(AnalyticsError::LengthMismatch {
                    what: "theta row",
                    expected: column_ids.len(),
                    got: row.len(),
                });
            }
            Ok(row.iter().map(|&p| p >= tau).collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(PresenceMatrix {
        message_ids: message_ids.to_vec(),
        column_ids: column_ids.to_vec(),
        rule: format!("theta >= {tau}"),
        rows,
    })
}

/// Sub-topic presence: a message has a sub-topic when it contains at least
/// one of the sub-topic's words (multiword entries match as token runs).
pub fn presence_from_word_lists(
    docs: &[TokenizedDoc],
    lists: &[(String, Vec<String>)],
    tok_cfg: &TokenizerConfig,
) -> PresenceMatrix {
    let compiled: Vec<(usize, Vec<Vec<String>>)> = lists
        .iter()
        .enumerate()
        .map(|(c, (_, entries))| {
            let phrases: Vec<Vec<String>> = entries
                .iter()
                .map(|e| tokenize(e, tok_cfg))
                .filter(|p| !p.is_empty())
                .collect();
            (c, phrases)
        })
        .collect();
    let rows: Vec<Vec<bool>> = docs
        .iter()
        .map(|doc| {
            let singles: HashSet<&str> = doc.tokens.iter().map(|s| s.as_str()).collect();
            let mut row = vec![false; lists.len()];
            for (c, phrases) in &compiled {
                row[*c] = phrases.iter().any(|p| {
                    if p.len() == 1 {
                        singles.contains(p[0].as_str())
                    } else {
                        crate::corpus::contains_phrase(&doc.tokens, p)
                    }
                });
            }
            row
        })
        .collect();
    PresenceMatrix {
        message_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        column_ids: lists.iter().map(|(id, _)| id.clone()).collect(),
        rule: "contains any list word".into(),
        rows,
    }
}

/// Fraction of messages where each column is present. Columns are
/// independent; the fractions need not sum to 1.
pub fn frequency_distribution(presence: &PresenceMatrix) -> Result<Vec<f64>, AnalyticsError> {
    if presence.num_rows() == 0 {
        return Err(AnalyticsError::EmptyPresence);
    }
    let n = presence.num_rows() as f64;
    Ok((0..presence.num_columns())
        .map(|c| presence.rows.iter().filter(|r| r[c]).count() as f64 / n)
        .collect())
}

// ---------------------------------------------------------------------------
// NPMI
// ---------------------------------------------------------------------------

/// Normalized pointwise mutual information between two column sets.
/// `None` marks pairs that never co-occur (NPMI undefined); exports may
/// floor them at a configured value.
#[derive(Debug, Clone, PartialEq)]
pub struct NpmiMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub entries: Vec<Vec<Option<f64>>>,
}

pub fn npmi(
    presence: &PresenceMatrix,
    set_a: &[usize],
    set_b: &[usize],
) -> Result<NpmiMatrix, AnalyticsError> {
    if presence.num_rows() == 0 {
        return Err(AnalyticsError::EmptyPresence);
    }
    for &c in set_a.iter().chain(set_b) {
        if c >= presence.num_columns() {
            return Err(AnalyticsError::BadColumn {
                column: c,
                columns: presence.num_columns(),
            });
        }
    }
    let n = presence.num_rows() as f64;
    let marginal = |c: usize| presence.rows.iter().filter(|r| r[c]).count() as f64 / n;
    let entries: Vec<Vec<Option<f64>>> = set_a
        .iter()
        .map(|&a| {
            let pa = marginal(a);
            set_b
                .iter()
                .map(|&b| {
                    let pb = marginal(b);
                    let joint = presence.rows.iter().filter(|r| r[a] && r[b]).count() as f64 / n;
                    if joint == 0.0 {
                        None
                    } else if joint >= 1.0 {
                        Some(1.0)
                    } else {
                        Some((joint / (pa * pb)).ln() / -joint.ln())
                    }
                })
                .collect()
        })
        .collect();
    Ok(NpmiMatrix {
        row_ids: set_a
            .iter()
            .map(|&c| presence.column_ids[c].clone())
            .collect(),
        col_ids: set_b
            .iter()
            .map(|&c| presence.column_ids[c].clone())
            .collect(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Kinship segmentation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    Old,
    AdultYoung,
}

impl AgeGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgeGroup::Old => "old",
            AgeGroup::AdultYoung => "adult_young",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KinshipEntry {
    pub keyword: String,
    pub age_group: AgeGroup,
    pub gender: Gender,
}

/// Language pack for kinship detection: possessive markers plus the keyword
/// table. A match is a possessive immediately followed by a keyword, with
/// the keyword starting inside the first `window` tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KinshipConfig {
    pub window: usize,
    pub possessives: Vec<String>,
    pub entries: Vec<KinshipEntry>,
}

impl Default for KinshipConfig {
    fn default() -> Self {
        KinshipConfig {
            window: 50,
            possessives: vec!["my".into()],
            entries: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub message_id: String,
    pub matched_keyword: String,
    pub age_group: AgeGroup,
    pub gender: Gender,
}

/// Scan each message's opening tokens for a possessive-kinship pattern; the
/// leftmost (and, at equal position, longest) match wins and produces at
/// most one record per message.
pub fn segment_by_kinship(
    docs: &[TokenizedDoc],
    config: &KinshipConfig,
    tok_cfg: &TokenizerConfig,
) -> Vec<SegmentRecord> {
    let possessives: HashSet<String> = config
        .possessives
        .iter()
        .flat_map(|p| tokenize(p, tok_cfg))
        .collect();
    // keyword patterns longest-first so "father in law" beats "father"
    let mut patterns: Vec<(Vec<String>, &KinshipEntry)> = config
        .entries
        .iter()
        .map(|e| (tokenize(&e.keyword, tok_cfg), e))
        .filter(|(p, _)| !p.is_empty())
        .collect();
    patterns.sort_by_key(|p| std::cmp::Reverse(p.0.len()));

    let mut records = Vec::new();
    for doc in docs {
        // the keyword must start inside the window, so the possessive can
        // sit at most at window - 2
        let scan_end = config.window.min(doc.tokens.len());
        'doc: for i in 0..scan_end.saturating_sub(1) {
            if !possessives.contains(&doc.tokens[i]) {
                continue;
            }
            let start = i + 1;
            for (pattern, entry) in &patterns {
                if doc.tokens.len() - start >= pattern.len()
                    && doc.tokens[start..start + pattern.len()] == pattern[..]
                {
                    records.push(SegmentRecord {
                        message_id: doc.doc_id.clone(),
                        matched_keyword: entry.keyword.clone(),
                        age_group: entry.age_group,
                        gender: entry.gender,
                    });
                    break 'doc;
                }
            }
        }
    }
    records
}

/// Age and gender fractions of a segmented sample. Unknown-gender records
/// are excluded from the gender denominators and reported separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDistribution {
    pub total: usize,
    pub age_fractions: BTreeMap<AgeGroup, f64>,
    pub gender_fractions: BTreeMap<Gender, f64>,
    pub unknown_gender: usize,
}

pub fn segment_distribution(
    records: &[SegmentRecord],
) -> Result<SegmentDistribution, AnalyticsError> {
    if records.is_empty() {
        return Err(AnalyticsError::NoRecords);
    }
    let total = records.len();
    let mut age_counts: BTreeMap<AgeGroup, usize> = BTreeMap::new();
    let mut gender_counts: BTreeMap<Gender, usize> = BTreeMap::new();
    for r in records {
        *age_counts.entry(r.age_group).or_insert(0) += 1;
        *gender_counts.entry(r.gender).or_insert(0) += 1;
    }
    let unknown_gender = gender_counts.remove(&Gender::Unknown).unwrap_or(0);
    let gendered = total - unknown_gender;
    Ok(SegmentDistribution {
        total,
        age_fractions: age_counts
            .into_iter()
            .map(|(g, c)| (g, c as f64 / total as f64))
            .collect(),
        gender_fractions: gender_counts
            .into_iter()
            .map(|(g, c)| {
                let f = if gendered > 0 {
                    c as f64 / gendered as f64
                } else {
                    0.0
                };
                (g, f)
            })
            .collect(),
        unknown_gender,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossTabAxis {
    Age,
    Gender,
}

/// Per-group column incidence: for each group of segmented messages, the
/// fraction where each presence column is on. Groups without messages are
/// `None`, distinct from an all-zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTab {
    pub axis: &'static str,
    pub column_ids: Vec<String>,
    pub groups: Vec<(String, Option<Vec<f64>>)>,
}

pub fn cross_tab(
    records: &[SegmentRecord],
    presence: &PresenceMatrix,
    axis: CrossTabAxis,
) -> Result<CrossTab, AnalyticsError> {
    let row_of: HashMap<&str, usize> = presence
        .message_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let group_names: Vec<String> = match axis {
        CrossTabAxis::Age => [AgeGroup::Old, AgeGroup::AdultYoung]
            .iter()
            .map(|g| g.as_str().to_owned())
            .collect(),
        CrossTabAxis::Gender => [Gender::Male, Gender::Female]
            .iter()
            .map(|g| g.as_str().to_owned())
            .collect(),
    };
    let mut group_rows: Vec<Vec<usize>> = vec![Vec::new(); group_names.len()];
    for r in records {
        let row = *row_of
            .get(r.message_id.as_str())
            .ok_or_else(|| AnalyticsError::UnknownMessage(r.message_id.clone()))?;
        let group = match axis {
            CrossTabAxis::Age => match r.age_group {
                AgeGroup::Old => Some(0),
                AgeGroup::AdultYoung => Some(1),
            },
            CrossTabAxis::Gender => match r.gender {
                Gender::Male => Some(0),
                Gender::Female => Some(1),
                Gender::Unknown => None,
            },
        };
        if let Some(g) = group {
            group_rows[g].push(row);
        }
    }
    let groups = group_names
        .into_iter()
        .zip(group_rows)
        .map(|(name, rows)| {
            if rows.is_empty() {
                return (name, None);
            }
            let incidence: Vec<f64> = (0..presence.num_columns())
                .map(|c| {
                    rows.iter().filter(|&&r| presence.entry(r, c)).count() as f64
                        / rows.len() as f64
                })
                .collect();
            (name, Some(incidence))
        })
        .collect();
    Ok(CrossTab {
        axis: match axis {
            CrossTabAxis::Age => "age",
            CrossTabAxis::Gender => "gender",
        },
        column_ids: presence.column_ids.clone(),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc(id: &str, text: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.into(),
            tokens: text.split_whitespace().map(Into::into).collect(),
        }
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    #[test]
    fn theta_threshold_presence() {
        let theta = vec![vec![0.95, 0.05]];
        let got = presence_from_theta(&ids(1), &theta, &["t0".to_string(), "t1".to_string()], 0.1)
            .unwrap();
        assert!(got.entry(0, 0));
        assert!(!got.entry(0, 1));
        assert!(got.rule.contains("0.1"));
    }

    #[test]
    fn word_list_presence_single_and_multiword() {
        let docs = vec![
            doc("m0", "strong polyuria at night"),
            doc("m1", "nothing relevant here"),
            doc("m2", "i put on weight recently"),
        ];
        let lists = vec![
            (
                "POLYURIA".to_string(),
                vec!["urine".to_string(), "polyuria".to_string()],
            ),
            ("WEIGHT".to_string(), vec!["put on weight".to_string()]),
        ];
        let got = presence_from_word_lists(&docs, &lists, &TokenizerConfig::new());
        assert!(got.entry(0, 0));
        assert!(!got.entry(1, 0));
        assert!(!got.entry(1, 1));
        assert!(got.entry(2, 1));
    }

    #[test]
    fn presence_matches_per_cell_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let vocabulary = ["u", "v", "w", "x", "y", "z"];
        let docs: Vec<TokenizedDoc> = (0..40)
            .map(|i| {
                let tokens: Vec<String> = (0..rng.gen_range(0..8))
                    .map(|_| vocabulary[rng.gen_range(0..vocabulary.len())].to_string())
                    .collect();
                TokenizedDoc {
                    doc_id: format!("m{i}"),
                    tokens,
                }
            })
            .collect();
        let lists = vec![
            ("A".to_string(), vec!["u".to_string(), "v".to_string()]),
            ("B".to_string(), vec!["z".to_string()]),
        ];
        let got = presence_from_word_lists(&docs, &lists, &TokenizerConfig::new());
        for (r, d) in docs.iter().enumerate() {
            for (c, (_, entries)) in lists.iter().enumerate() {
                let oracle = entries.iter().any(|e| d.tokens.iter().any(|t| t == e));
                assert_eq!(got.entry(r, c), oracle, "row {r} col {c}");
            }
        }
    }

    fn matrix(rows: Vec<Vec<bool>>, cols: &[&str]) -> PresenceMatrix {
        PresenceMatrix::from_rows(
            ids(rows.len()),
            cols.iter().map(|s| s.to_string()).collect(),
            "test".into(),
            rows,
        )
    }

    #[test]
    fn frequency_distribution_fractions() {
        let rows: Vec<Vec<bool>> = (0..10).map(|i| vec![true, false, i < 3]).collect();
        let m = matrix(rows, &["all", "none", "some"]);
        let got = frequency_distribution(&m).unwrap();
        assert_eq!(got, vec![1.0, 0.0, 0.3]);

        let empty = matrix(Vec::new(), &["a"]);
        assert!(matches!(
            frequency_distribution(&empty),
            Err(AnalyticsError::EmptyPresence)
        ));
    }

    #[test]
    fn npmi_independence_is_zero() {
        // p(a)=p(b)=0.5, joint=0.25 over four rows
        let m = matrix(
            vec![
                vec![true, true],
                vec![true, false],
                vec![false, true],
                vec![false, false],
            ],
            &["a", "b"],
        );
        let got = npmi(&m, &[0], &[1]).unwrap();
        assert!(got.entries[0][0].unwrap().abs() <= 1e-12);
    }

    #[test]
    fn npmi_identical_columns_are_one() {
        let m = matrix(vec![vec![true, true], vec![false, false]], &["a", "b"]);
        let got = npmi(&m, &[0], &[1]).unwrap();
        assert_eq!(got.entries[0][0], Some(1.0));
    }

    #[test]
    fn npmi_disjoint_columns_are_undefined() {
        let m = matrix(vec![vec![true, false], vec![false, true]], &["a", "b"]);
        let got = npmi(&m, &[0], &[1]).unwrap();
        assert_eq!(got.entries[0][0], None);
    }

    #[test]
    fn npmi_symmetry_and_bounds_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..1000 {
            let rows = rng.gen_range(2..12);
            let cols = rng.gen_range(2..5);
            let data: Vec<Vec<bool>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_bool(0.5)).collect())
                .collect();
            let m = PresenceMatrix::from_rows(
                ids(rows),
                (0..cols).map(|c| format!("c{c}")).collect(),
                "rand".into(),
                data,
            );
            let all: Vec<usize> = (0..cols).collect();
            let got = npmi(&m, &all, &all).unwrap();
            for i in 0..cols {
                for j in 0..cols {
                    match (got.entries[i][j], got.entries[j][i]) {
                        (Some(x), Some(y)) => {
                            assert!((x - y).abs() < 1e-12, "asymmetry {x} vs {y}");
                            assert!(
                                (-1.0 - 1e-12..=1.0 + 1e-12).contains(&x),
                                "out of bounds {x}"
                            );
                        }
                        (None, None) => {}
                        other => panic!("asymmetric definedness {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn npmi_invariant_under_row_duplication() {
        let rows = vec![
            vec![true, true, false],
            vec![true, false, true],
            vec![false, true, true],
        ];
        let m = matrix(rows.clone(), &["a", "b", "c"]);
        let doubled = matrix(
            rows.iter().cloned().chain(rows.clone()).collect(),
            &["a", "b", "c"],
        );
        let cols: Vec<usize> = vec![0, 1, 2];
        let a = npmi(&m, &cols, &cols).unwrap();
        let b = npmi(&doubled, &cols, &cols).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                match (a.entries[i][j], b.entries[i][j]) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
                    (None, None) => {}
                    other => panic!("definedness changed {other:?}"),
                }
            }
        }
        let fa = frequency_distribution(&m).unwrap();
        let fb = frequency_distribution(&doubled).unwrap();
        assert_eq!(fa, fb);
    }

    fn english_pack() -> KinshipConfig {
        KinshipConfig {
            window: 50,
            possessives: vec!["my".into()],
            entries: vec![
                KinshipEntry {
                    keyword: "mother".into(),
                    age_group: AgeGroup::Old,
                    gender: Gender::Female,
                },
                KinshipEntry {
                    keyword: "father".into(),
                    age_group: AgeGroup::Old,
                    gender: Gender::Male,
                },
                KinshipEntry {
                    keyword: "husband".into(),
                    age_group: AgeGroup::AdultYoung,
                    gender: Gender::Male,
                },
                KinshipEntry {
                    keyword: "cousin".into(),
                    age_group: AgeGroup::AdultYoung,
                    gender: Gender::Unknown,
                },
                KinshipEntry {
                    keyword: "father in law".into(),
                    age_group: AgeGroup::Old,
                    gender: Gender::Male,
                },
            ],
        }
    }

    #[test]
    fn kinship_basic_matches() {
        let docs = vec![
            doc("m0", "my mother has high glycemia since spring"),
            doc("m1", "my husband keeps forgetting appointments"),
            doc("m2", "the mother of a friend"), // no possessive
        ];
        let got = segment_by_kinship(&docs, &english_pack(), &TokenizerConfig::new());
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].message_id, "m0");
        assert_eq!(got[0].age_group, AgeGroup::Old);
        assert_eq!(got[0].gender, Gender::Female);
        assert_eq!(got[1].age_group, AgeGroup::AdultYoung);
        assert_eq!(got[1].gender, Gender::Male);
    }

    #[test]
    fn kinship_longest_pattern_wins() {
        let docs = vec![doc("m0", "my father in law is diabetic")];
        let got = segment_by_kinship(&docs, &english_pack(), &TokenizerConfig::new());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].matched_keyword, "father in law");
    }

    #[test]
    fn kinship_window_rule() {
        let mut text: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
        text[59] = "mother".into();
        text[58] = "my".into();
        let late = TokenizedDoc {
            doc_id: "m0".into(),
            tokens: text,
        };
        let got = segment_by_kinship(&[late], &english_pack(), &TokenizerConfig::new());
        assert!(
            got.is_empty(),
            "keyword at position 59 with window 50 matched"
        );

        // keyword exactly at the window edge: position 49 is still inside
        let mut text: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
        text[49] = "mother".into();
        text[48] = "my".into();
        let edge = TokenizedDoc {
            doc_id: "m1".into(),
            tokens: text,
        };
        let got = segment_by_kinship(&[edge], &english_pack(), &TokenizerConfig::new());
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn kinship_first_match_wins_once_per_message() {
        let docs = vec![doc("m0", "my mother and my father are both here")];
        let got = segment_by_kinship(&docs, &english_pack(), &TokenizerConfig::new());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].matched_keyword, "mother");
    }

    fn record(id: &str, age: AgeGroup, gender: Gender) -> SegmentRecord {
        SegmentRecord {
            message_id: id.into(),
            matched_keyword: "k".into(),
            age_group: age,
            gender,
        }
    }

    #[test]
    fn distribution_reproduces_planted_age_ratio() {
        // 7451 old of 10000: fraction 0.7451 exactly
        let mut records = Vec::new();
        for i in 0..7451 {
            records.push(record(&format!("o{i}"), AgeGroup::Old, Gender::Female));
        }
        for i in 0..2549 {
            records.push(record(&format!("a{i}"), AgeGroup::AdultYoung, Gender::Male));
        }
        let got = segment_distribution(&records).unwrap();
        assert!((got.age_fractions[&AgeGroup::Old] - 0.7451).abs() < 1e-4);
    }

    #[test]
    fn distribution_handles_unknown_gender() {
        let records = vec![
            record("a", AgeGroup::Old, Gender::Female),
            record("b", AgeGroup::Old, Gender::Female),
            record("c", AgeGroup::AdultYoung, Gender::Male),
            record("d", AgeGroup::AdultYoung, Gender::Unknown),
        ];
        let got = segment_distribution(&records).unwrap();
        assert_eq!(got.total, 4);
        assert_eq!(got.unknown_gender, 1);
        assert!((got.gender_fractions[&Gender::Female] - 2.0 / 3.0).abs() < 1e-12);
        assert!((got.gender_fractions[&Gender::Male] - 1.0 / 3.0).abs() < 1e-12);
        assert!((got.age_fractions[&AgeGroup::Old] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distribution_all_female() {
        let records = vec![
            record("a", AgeGroup::Old, Gender::Female),
            record("b", AgeGroup::AdultYoung, Gender::Female),
        ];
        let got = segment_distribution(&records).unwrap();
        assert_eq!(got.gender_fractions[&Gender::Female], 1.0);
        assert!(segment_distribution(&[]).is_err());
    }

    #[test]
    fn cross_tab_single_group_reduces_to_frequency() {
        let m = matrix(
            vec![vec![true, false], vec![true, true], vec![false, false]],
            &["s0", "s1"],
        );
        let records = vec![
            record("m0", AgeGroup::Old, Gender::Female),
            record("m1", AgeGroup::Old, Gender::Male),
            record("m2", AgeGroup::Old, Gender::Female),
        ];
        let got = cross_tab(&records, &m, CrossTabAxis::Age).unwrap();
        let old = got.groups[0].1.as_ref().unwrap();
        let freq = frequency_distribution(&m).unwrap();
        assert_eq!(old, &freq);
        // empty group is undefined, not zero
        assert_eq!(got.groups[1].1, None);
    }

    #[test]
    fn cross_tab_disjoint_groups() {
        let m = matrix(vec![vec![true, false], vec![false, true]], &["s0", "s1"]);
        let records = vec![
            record("m0", AgeGroup::Old, Gender::Female),
            record("m1", AgeGroup::AdultYoung, Gender::Male),
        ];
        let got = cross_tab(&records, &m, CrossTabAxis::Age).unwrap();
        assert_eq!(got.groups[0].1, Some(vec![1.0, 0.0]));
        assert_eq!(got.groups[1].1, Some(vec![0.0, 1.0]));

        let by_gender = cross_tab(&records, &m, CrossTabAxis::Gender).unwrap();
        assert_eq!(by_gender.groups[0].1, Some(vec![0.0, 1.0])); // male = m1
        assert_eq!(by_gender.groups[1].1, Some(vec![1.0, 0.0])); // female = m0
    }

    #[test]
    fn cross_tab_rejects_unknown_message() {
        let m = matrix(vec![vec![true]], &["s0"]);
        let records = vec![record("missing", AgeGroup::Old, Gender::Female)];
        assert!(matches!(
            cross_tab(&records, &m, CrossTabAxis::Age),
            Err(AnalyticsError::UnknownMessage(_))
        ));
    }
}
